"""Salt-body reconstruction in frequency-domain full-waveform inversion
with a parametric level-set method.

The subsurface is split into a smooth background and a constant-velocity
salt body whose geometry is the zero contour of a level-set function
expanded in radial basis functions; the RBF weights are fit to seismic
data through adjoint-state gradients.
"""

from .grid import Grid2D
from .model import (BackgroundParam, Ellipse, EllipseUnion, Model, Polygon,
                    RasterMask, linear_background, make_salt_model,
                    model_bounds_project)
from .helmholtz import (HelmholtzSystem, PmlConfig, Wavefield, assemble_system,
                        factorize, solve_multi_rhs)
from .survey import (Acquisition, DataCube, add_noise, build_acquisition,
                     build_paper_acquisition, forward_model, ricker_weight)
from .adjoint import MisfitResult, fd_gradient_oracle, misfit_and_gradient, misfit_value
from .rbf import KernelMatrix, RbfNodeGrid, RbfSpec, assemble_kernel, build_node_grid, eval_rbf
from .levelset import (HeavisideConfig, LevelSet, adaptive_epsilon, compose_model,
                       fit_shape, heaviside, heaviside_derivative, init_levelset,
                       intersection_over_union, levelset_gradient)
from .optimize import OptimizeConfig, bisection_scalar, lbfgs_minimize, projected_qn_minimize
from .inversion import (InversionConfig, InversionRun, achievable_erf, classic_fwi,
                        erf, joint_invert, pls_fwi_basic, pls_fwi_multiscale, rre)

__version__ = "0.1.0"
