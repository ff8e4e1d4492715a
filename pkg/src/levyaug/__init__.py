"""levyaug: data augmentation by thinning exponential-family processes.

Observed feature vectors are modeled as a fixed-time slice of a process
with independent, stationary increments; pseudo-examples are draws of an
earlier slice conditional on the observed one, which for the four built-in
families (Poisson counts, Gaussian sums, Gamma scatter, Wishart scatter
matrices) is possible in closed form without knowing the generative
parameters.  On top of the samplers the package provides a calibrated
ridge logistic-regression pipeline with origin-grouped cross-validation,
the analytic maximum-thinning limit of that pipeline, exact brute-force
oracles, and a benchmark simulation harness with a CLI.
"""

__version__ = "0.1.0"

from .errors import (
    DataFormatError,
    DecompositionError,
    DegenerateDataError,
    LevyAugError,
    OptimizationError,
    ParameterError,
    ShapeError,
    SupportError,
)
from .families import (
    Example,
    FamilyKind,
    LevyFamily,
    PseudoExample,
    Topic,
    check_example,
    check_features,
    gamma_family,
    gaussian_family,
    log_carrier,
    log_partition,
    poisson_family,
    thinning_density_normalized,
    thinning_log_density,
    wishart_family,
)
from .logistic import (
    FeatureMap,
    LogisticModel,
    TrainConfig,
    calibrate,
    fit_logistic,
    fit_logistic_detailed,
    load_model,
    logistic_loss,
    loss_gradient,
    predict,
    save_model,
)
from .oracles import (
    TopicMixture,
    exact_posterior,
    poisson_thinning_kernel_enumerate,
    wishart_split_oracle,
)
from .rng import RngState
from .simulation import (
    GaussianSimSpec,
    PoissonSimSpec,
    SweepResult,
    SweepRow,
    gen_gaussian_sim,
    gen_poisson_sim,
    render_sweep_svg,
    run_alpha_sweep,
    write_sweep_csv,
)
from .strong_thinning import (
    AlphaPathPoint,
    ConditionalJumpLaw,
    JumpKind,
    LevyItoDescriptor,
    alpha_path_converges,
    conditional_jump_law,
    fit_strong_thinning,
    gaussian_limit_law,
    limit_loss,
    limit_loss_gradient,
    naive_bayes_poisson_fit,
    poisson_limit_law,
)
from .thinning import (
    ThinningConfig,
    generate_pseudo_examples,
    thin_gamma,
    thin_gaussian,
    thin_poisson,
    thin_wishart,
)
