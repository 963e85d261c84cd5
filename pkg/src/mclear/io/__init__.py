"""Case files, network ingestion, scenario generation, built-in systems, reports."""
from .builtin import (BUILTINS, builtin_system1, builtin_system2, scale_generator_increments,
                      system1_stochastic_demand, system2_line_failures)
from .casefile import (dump_case, dump_scenarios, load_case, parse_case, parse_scenarios,
                       save_case)
from .errors import ParseError, UnsupportedField
from .matpower import load_matpower_subset, parse_matpower
from .report import ReportError, write_comparison, write_report
from .scenarios import (ScenarioSpec, SpecError, SplitMix64, generate_scenarios, parse_spec,
                        scenarios_to_json)
from .studies import ieee118_case

__all__ = [
    "BUILTINS", "ParseError", "ReportError", "ScenarioSpec", "SpecError", "SplitMix64",
    "UnsupportedField", "builtin_system1", "builtin_system2", "dump_case", "dump_scenarios",
    "generate_scenarios", "ieee118_case", "load_case", "load_matpower_subset",
    "parse_case", "parse_matpower", "parse_scenarios", "parse_spec", "save_case", "scale_generator_increments",
    "scenarios_to_json", "system1_stochastic_demand", "system2_line_failures",
    "write_comparison", "write_report",
]
