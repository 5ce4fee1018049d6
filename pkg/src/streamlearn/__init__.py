"""streamlearn: online pixel-to-pixel learning from a single video stream.

A desk-scale framework: tensors with reverse-mode differentiation, a tiny
pixel-to-pixel model zoo, stateful optimizers and schedules, synthetic and
directory-backed annotated video streams, RGB task codecs, future-prediction
corruptions, an adaptation/generalization evaluation protocol, and an
experiment harness with CSV logging and bitwise-resumable checkpoints.
"""
from .codecs import (Colormap, EncodedTarget, decode_prediction,
                     depth_colormap, encode_target, load_colormap,
                     segmentation_colormap)
from .config import ExperimentConfig, load_config, save_config
from .corruptions import CorruptionConfig, corrupt
from .diagnostics import grad_cosine, grad_norm, summarize
from .errors import ConfigurationError, DivergenceError, NumericError
from .evaluation import (BlindState, MetricSeries, blind_step,
                         cumulative_score, logrmse, make_blind_state,
                         out_of_stream_eval, segmentation_metrics)
from .harness import evaluate_checkpoint, preset, run_experiment
from .models import (ModelConfig, architecture, build_model, finite_diff_grad,
                     inflate_input_weights, l2_pixel_loss, param_count,
                     predict, value_and_grad)
from .optim import (Accumulator, AnchorState, LRSchedule, OptimizerConfig,
                    OptimizerState, accumulate, anchor_penalty_grad,
                    init_state, lr_at, optimizer_step)
from .replay import ReplayBuffer
from .stream_io import read_stream_dir, write_stream_dir
from .streams import (AnnotatedStream, Augmenter, StreamCursor,
                      SyntheticConfig, TimeStep, augment, iid_sampler,
                      next_example, synth_stream)
from .tensor import Tensor

__version__ = "0.1.0"
