import configparser
import os
from typing import Dict, Optional

from toprank.core.bounds import BoundConstants
from toprank.core.errors import InvalidConfig
from toprank.service.log import logger
from toprank.service.utils import singleton

EXPERIMENT_SECTION = "experiment"


@singleton
class ConfigReader:
    """Site-wide defaults for solver, refinement, harness and theorem constants."""

    def __init__(self, config_path: Optional[str] = None):
        self.config_path = config_path or os.environ.get(
            "TOPRANK_CONFIG", "/etc/toprank/toprank.conf"
        )
        self.config = configparser.ConfigParser(inline_comment_prefixes=("#",))
        self.read_config()

    def read_config(self):
        try:
            self.config.read(self.config_path)
        except configparser.Error as e:
            raise InvalidConfig(f"Failed to read configuration file: {e}")

    def get(self, section, attribute, default=None):
        try:
            return self.config.get(section, attribute)
        except (configparser.NoSectionError, configparser.NoOptionError) as e:
            logger.debug(e)
            return default

    def get_float(self, section, attribute, default: float) -> float:
        value = self.get(section, attribute)
        if value is None:
            return default
        try:
            return float(value)
        except ValueError:
            raise InvalidConfig(f"[{section}] {attribute} is not a number: {value!r}")

    def get_int(self, section, attribute, default: int) -> int:
        value = self.get(section, attribute)
        if value is None:
            return default
        try:
            return int(value)
        except ValueError:
            raise InvalidConfig(f"[{section}] {attribute} is not an integer: {value!r}")

    def get_solver_tol(self) -> float:
        return self.get_float("Solver", "tol", 1e-10)

    def get_max_iter_cap(self) -> int:
        return self.get_int("Solver", "max_iter_cap", 100_000)

    def get_mle_inner_tol(self) -> float:
        return self.get_float("MLE", "inner_tol", 1e-8)

    def get_mle_replace_threshold(self) -> float:
        return self.get_float("MLE", "replace_threshold", 0.0)

    def get_workers(self) -> int:
        return self.get_int("Harness", "workers", 1)

    def get_trials(self) -> int:
        return self.get_int("Harness", "trials", 200)

    def get_max_retries(self) -> int:
        return self.get_int("Harness", "max_retries", 100)

    def get_constants(self) -> BoundConstants:
        defaults = BoundConstants()
        return BoundConstants(
            **{
                name: self.get_float("Constants", name, getattr(defaults, name))
                for name in ("c1", "c2", "c3", "c4", "c5", "c6", "epsilon")
            }
        )


def read_key_values(path: str) -> Dict[str, str]:
    """`key = value` lines, with or without a section header."""
    try:
        with open(path, "r") as f:
            text = f.read()
    except OSError as e:
        raise InvalidConfig(f"Cannot read experiment file {path}: {e}")
    if not text.lstrip().startswith("["):
        text = f"[{EXPERIMENT_SECTION}]\n" + text
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    try:
        parser.read_string(text)
    except configparser.Error as e:
        raise InvalidConfig(f"Malformed experiment file {path}: {e}")
    values: Dict[str, str] = {}
    for section in parser.sections():
        values.update(parser.items(section))
    return values
