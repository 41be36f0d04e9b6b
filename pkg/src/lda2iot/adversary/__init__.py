"""Dolev-Yao channel control, scripted attacks and the real-or-random game."""
from .scenarios import (
    FORGERS,
    SCENARIOS,
    SUITE,
    AttackOutcome,
    Scenario,
    corrupt_sensing_device,
    corrupt_user_device,
    dump_scenarios,
    get_scenario,
    level_guess_attack,
    load_scenarios,
    run_attack,
    run_suite,
)
from .tap import ChannelTap, Knowledge, TapRecord, TapRule
from .ror import (
    DISTINGUISHERS,
    DistinguisherReport,
    OracleQuery,
    QueryKind,
    RORWorld,
    oracle,
    run_distinguisher,
)
