# src/__init__.py

from typing import Optional


def create_runner(benchmark: str, algorithm: str, config=None, seed: Optional[int] = None):
    """
    Factory function to create a runner for one algorithm on one benchmark.

    Args:
        benchmark: Benchmark tag
        algorithm: Algorithm tag
        config: Optional ExperimentConfig; defaults are used when omitted
        seed: Optional run seed; the config's master seed when omitted

    Returns:
        A BayesOptRunner ready to ``run()``
    """
    # Imported here because config.experiment_config imports src.errors
    from config.experiment_config import ExperimentConfig
    from src.bench import get_benchmark
    from src.loop import AlgorithmId, BayesOptRunner

    config = config or ExperimentConfig()
    spec = get_benchmark(benchmark)
    return BayesOptRunner(spec, config, AlgorithmId.parse(algorithm),
                          config.master_seed if seed is None else seed)
