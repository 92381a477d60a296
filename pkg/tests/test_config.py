import math

import pytest

from gpattack.config import (
    ExperimentConfig,
    config_to_text,
    get_value,
    load_config,
    parse_config,
    parse_value,
    with_value,
)
from gpattack.errors import ConfigurationError


class TestParse:
    def test_example(self):
        cfg = parse_config("attack.variant=clipping\nattack.delta=17.8\nkernel.family=matern52\n")
        assert cfg.attack.variant == "clipping"
        assert cfg.attack.delta == 17.8
        assert cfg.kernel.family == "matern52"

    def test_comments_and_blank_lines(self):
        cfg = parse_config("# header\n\nseed = 4  # trailing\n")
        assert cfg.seed == 4

    def test_unknown_key(self):
        with pytest.raises(ConfigurationError, match="line 2"):
            parse_config("seed=1\nattack.strength=3\n")

    def test_section_is_not_a_value(self):
        with pytest.raises(ConfigurationError):
            parse_config("attack=clipping")

    def test_missing_equals(self):
        with pytest.raises(ConfigurationError):
            parse_config("seed 3")

    def test_none_variant(self):
        assert parse_config("attack.variant = none").attack.variant == "none"

    def test_bumps_and_dynamic(self):
        cfg = parse_config('attack.bumps=[{"center": [0.5], "width": 0.1, "height_scale": 2}]\n'
                           "attack.dynamic.enabled=true\nattack.dynamic.K=4")
        assert cfg.attack.bumps[0]["width"] == 0.1
        assert cfg.attack.dynamic.enabled and cfg.attack.dynamic.K == 4

    def test_lambda_alias(self):
        assert parse_config("player.lambda=0.5").player.lam == 0.5

    def test_values(self):
        assert parse_value("inf") == math.inf
        assert parse_value("true") is True
        assert parse_value("[1, 2]") == [1, 2]
        assert parse_value("matern32") == "matern32"

    def test_integer_fields(self):
        with pytest.raises(ConfigurationError):
            parse_config("T=10.5")

    def test_validation(self):
        with pytest.raises(ConfigurationError):
            parse_config("objective=sphere")
        with pytest.raises(ConfigurationError):
            parse_config("kernel.fit=fixed")
        with pytest.raises(ConfigurationError):
            parse_config("region.centroid=[0.1]")


class TestRoundTrip:
    def test_text_round_trip(self, tmp_path):
        cfg = parse_config("objective=levy1d\nattack.variant=clipping\nattack.delta=3\nplayer.beta=defense\n"
                           "player.defense_c=2\nattack.budget_mode=capped\nattack.budget_cap=12.5")
        path = tmp_path / "c.txt"
        path.write_text(config_to_text(cfg))
        assert load_config(path) == cfg

    def test_with_value_copies(self):
        base = ExperimentConfig()
        new = with_value(base, "attack.delta", 2.0)
        assert base.attack.delta == 0.0 and get_value(new, "attack.delta") == 2.0
