"""Characteristic mapping method for 2D periodic transport and ideal MHD.

The package evolves backward characteristic maps on gradient-augmented
Hermite grids, accumulates source terms through their Duhamel integral,
and couples both to a spectral Biot-Savart solve for inviscid vorticity
dynamics with a Lorentz-force source.
"""

from .hermite import GridSpec, HermiteField, HermiteVectorField, project_to_hermite
from .spectral import (SpectralWorkspace, biot_savart, curl2d, div2d, grad_spectral,
                       inv_laplace, laplacian, leray_project, lowpass, shell_spectrum)
from .flowmap import (CharMap, FieldHistory, OneStepIntegrator, SourceHistory, SubmapStack,
                      VelocityHistory, advance_map, adjugate_apply, check_remap, compose_eval,
                      one_step_map, pullback_scalar, pullback_twoform)
from .source import SourceField, advance_source, total_source_eval, vorticity_eval
from .diagnostics import (TimeSeriesRecord, cross_helicity, energies, eoc, linf_error,
                          spectrum_fit, squared_potential)

__version__ = "0.1.0"
