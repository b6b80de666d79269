"""cachebound: cost-quality boundary exploration for cache miss-rate models.

Pipeline: access trace -> LRU miss rates -> discretized sequence ->
gated recurrent model trained under a sparsity penalty -> threshold
sweep -> Pareto boundary -> phase and local-likelihood analysis.
"""

__version__ = "0.1.0"

from .errors import CacheBoundError, ConfigError, InputError, NumericalError, ParseError
from .trace import (AccessEvent, AccessKind, AccessTrace, constant_loop,
                    format_lackey_line, generate_synthetic, load_trace,
                    parse_lackey, periodic_phases, random_walk, serialize_lackey)
from .cachesim import (MissRateSeries, StackDistanceStream, miss_rate_series,
                       stack_distances)
from .preprocess import (ChunkSplit, DiscretizedSequence, chunk_split,
                         discretize, discretize_rates, log_clip)
from .seqmodel import (GatedModel, ModelArch, PrunedModel, apply_threshold,
                       cost_j, forward, init_model, load_model, nll,
                       objective_grad, objective_value, per_step_loglik,
                       save_model, sequences_nll)
from .boundary import (BoundaryCurve, ModelRecord, SweepConfig, TrainConfig,
                       WidthSpec, pareto_frontier, sweep, train)
from .analysis import (DescriptionLengthBound, LocalLikelihoodMap,
                       PhaseSegmentation, description_length,
                       local_likelihood_map, normalized_loss, per_step_series,
                       segment_phases)
