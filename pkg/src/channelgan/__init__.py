"""Learning stochastic wireless channel models p(y|x) from paired samples
with a conditional variational GAN."""

from .channels import (
    AdditiveChi2Channel,
    AwgnChannel,
    ComplexAwgnChannel,
    NonlinearQamChannel,
    NonlinearQamParams,
    SampleBatch,
    sample_dataset,
)
from .errors import (
    ConfigError,
    NumericError,
    ShapeError,
    StateError,
    TrainingDiverged,
)
from .evaluate import (
    ConditionalMoments,
    DensityEstimate,
    EvalConfig,
    EvalReport,
    compare_model,
    conditional_moments,
    histogram,
    js_divergence,
    kl_divergence,
    marginal_density,
    wasserstein1_1d,
)
from .experiment import (
    ExperimentConfig,
    compare_runs,
    get_preset,
    list_presets,
    parse_config,
    run_experiment,
)
from .modulation import SymbolSource, bpsk_source, draw_symbols, qam16_source, qpsk_source
from .netcore import (
    AdamState,
    DenseLayer,
    LayerStack,
    adam_step,
    fc_forward,
    finite_diff_grad,
    init_params,
    load_stack,
    sampler_forward,
    save_stack,
    stack_backward,
    stack_forward,
)
from .vgan import (
    DiscriminatorSpec,
    GeneratorSampler,
    GeneratorSpec,
    TrainConfig,
    TrainHistory,
    build_discriminator,
    build_generator,
    gan_discriminator_update,
    gan_generator_update,
    mse_loss_grad,
    train,
    wgan_discriminator_update,
    wgan_generator_update,
)

__version__ = "0.1.0"
