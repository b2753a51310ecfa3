"""finflowrl: market-making lab with flow-policy pre-training and
noise-space RL fine-tuning, backed by the C++ core."""

from finflowrl._core import (
    ChunkConfig,
    EpisodeResult,
    ExpertParams,
    HawkesParams,
    MarketParams,
    as_quote,
    default_config_json,
    evaluate,
    fgn_autocovariance,
    generate_chunk,
    glft_quote,
    hawkes_counts,
    max_drawdown,
    paired_one_sided_pvalue,
    run_episode,
    sharpe_ratio,
    simulate_fbm,
)

__all__ = [
    "ChunkConfig",
    "EpisodeResult",
    "ExpertParams",
    "HawkesParams",
    "MarketParams",
    "as_quote",
    "default_config_json",
    "evaluate",
    "fgn_autocovariance",
    "generate_chunk",
    "glft_quote",
    "hawkes_counts",
    "max_drawdown",
    "paired_one_sided_pvalue",
    "run_episode",
    "sharpe_ratio",
    "simulate_fbm",
]

__version__ = "0.1.0"
