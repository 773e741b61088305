import pytest

from ignifront.config import ConfigError, parse_config

MINIMAL = """
experiment = tw-speed
theta0 = 0.25
g = 1
"""


class TestParsing:
    def test_minimal_config_fills_defaults(self):
        cfg = parse_config(MINIMAL)
        assert cfg.experiment == "tw-speed"
        assert cfg.g_min == cfg.g_max == 1.0
        assert cfg.dx == 0.05 and cfg.dt == 0.01
        assert cfg.n_list == (5.0, 10.0, 20.0, 40.0, 80.0)
        assert cfg.k_level == 0.25  # k defaults to theta0
        cfg.grid()  # runnable

    def test_sections_and_comments(self):
        cfg = parse_config(
            """
            # front experiment
            [experiment]
            experiment = wave
            n_list = 5 10 20
            [medium]
            g_min = 1.0
            g_max = 2.0   # inline comment
            [output]
            workers = 4
            """
        )
        assert cfg.experiment == "wave"
        assert cfg.n_list == (5.0, 10.0, 20.0)
        assert cfg.workers == 4

    def test_seed_shorthand(self):
        cfg = parse_config(MINIMAL + "seeds = 4@10\n")
        assert cfg.seeds == (10, 11, 12, 13)
        cfg2 = parse_config(MINIMAL + "seeds = 3 1 2\n")
        assert cfg2.seeds == (3, 1, 2)

    def test_hash_stability(self):
        a = parse_config(MINIMAL)
        b = parse_config(MINIMAL)
        assert a.content_hash == b.content_hash
        assert a.content_hash != parse_config(MINIMAL + "dx = 0.1\n").content_hash


class TestErrors:
    def test_unknown_key_cites_line(self):
        with pytest.raises(ConfigError, match="line 2.*unknown key 'fish'"):
            parse_config("experiment = wave\nfish = 1\n")

    def test_unknown_section(self):
        with pytest.raises(ConfigError, match=r"unknown section \[plots\]"):
            parse_config("[plots]\n")

    def test_duplicate_key_cites_both_lines(self):
        with pytest.raises(ConfigError, match="line 3.*duplicate key 'dx'.*line 2"):
            parse_config("experiment = wave\ndx = 0.1\ndx = 0.2\n")

    def test_bounds_constraint_named(self):
        with pytest.raises(ConfigError, match="g_min <= g_max"):
            parse_config("experiment = wave\ng_min = 2\ng_max = 1\n")

    def test_type_mismatch(self):
        with pytest.raises(ConfigError, match="line 2.*invalid value for 'N'"):
            parse_config("experiment = wave\nN = many\n")

    def test_missing_experiment(self):
        with pytest.raises(ConfigError, match="experiment"):
            parse_config("dx = 0.05\n")

    def test_unknown_experiment(self):
        with pytest.raises(ConfigError, match="experiment must be one of"):
            parse_config("experiment = warp\n")

    def test_g_shorthand_conflict(self):
        with pytest.raises(ConfigError, match="'g' .*conflicts"):
            parse_config("experiment = wave\ng = 1\ng_min = 1\n")

    def test_theta0_constraint(self):
        with pytest.raises(ConfigError, match="theta0"):
            parse_config("experiment = wave\ntheta0 = 1.2\n")
