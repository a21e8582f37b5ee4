import pytest

from gridspect.config import BUNDLED_CONFIGS, bundled_config_path, load_config, parse_config
from gridspect.exceptions import ConfigError


def test_defaults():
    cfg = parse_config("")
    assert cfg.estimators == ("wcwf",) and cfg.N == 10080


def test_full_parse():
    cfg = parse_config(
        """
[run]
seed = 5
[data]
N = 500
sigma_v = 0.1   # percent
balanced = no
[estimators]
names = ols, wcwf
[estimator.wcwf]
L = n
[estimator.lasso]
alpha_ratio = 1e-2
postfilter = true
[benchmark]
noise_pct = 0.01, 0.1
"""
    )
    assert cfg.seed == 5 and cfg.N == 500 and cfg.sigma_v == 0.1 and not cfg.balanced
    assert cfg.estimators == ("ols", "wcwf")
    assert cfg.estimator_params == {"wcwf": {"L": "n"}, "lasso": {"alpha_ratio": 0.01, "postfilter": True}}
    assert cfg.benchmark_config().noise_pcts == [0.01, 0.1]


def test_all_expands():
    assert len(parse_config("[estimators]\nnames = all\n").estimators) == 6


@pytest.mark.parametrize(
    "text, fragment",
    [
        ("[bogus]\nx = 1\n", "[bogus]"),
        ("[data]\nNN = 3\n", "unknown key"),
        ("[data]\nN = many\n", "[data] N"),
        ("[data]\nN = 1\n", "N must be"),
        ("[estimators]\nnames = ols, magic\n", "magic"),
        ("[estimator.ols]\nL = 3\n", "[estimator.ols]"),
        ("[network]\nsource = /no/such/file\n", "neither"),
        ("[benchmark]\nkind = grid\n", "[benchmark] kind"),
        ("[sweep]\nvariants = sideways\n", "sideways"),
        ("no section header\n", "<config>"),
    ],
)
def test_errors_name_location(text, fragment):
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    assert fragment in str(info.value)


@pytest.mark.parametrize("name", BUNDLED_CONFIGS)
def test_bundled_configs_parse(name):
    cfg = load_config(bundled_config_path(name))
    assert cfg.N == 10080


def test_bundled_unknown():
    with pytest.raises(ConfigError):
        bundled_config_path("nope")


def test_unreadable(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.cfg")
