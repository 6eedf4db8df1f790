import pytest

from ussir.scenario import build_model, bundled_scenario_path, load_scenario


@pytest.fixture(scope="session")
def scenario():
    """Factory loading (config, model) for a bundled scenario, cached for
    the whole session (model building scans expression bounds)."""
    cache = {}

    def get(name):
        if name not in cache:
            cfg = load_scenario(bundled_scenario_path(name))
            cache[name] = (cfg, build_model(cfg))
        return cache[name]

    return get
