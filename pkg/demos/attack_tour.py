"""
Attacking the exchange
======================

The built-in adversary scenarios run against a live bus through a tap
that can drop, delay, replay or rewrite messages. Each one reports whether
the victim accepted anything it should not have.
"""
from lda2iot.adversary import SUITE, run_attack
from lda2iot.protocol import freshness_disabled

for k, name in enumerate(SUITE):
    o = run_attack(name, seed=k)
    verdict = "held" if o.passed else "BROKEN"
    print(f"{name:28s} {verdict:7s} {o.protocol_result}")

###############################################################################
# Turn off the timestamp window and replays start getting through.
# This is the sanity check that the replay scenarios test something real.
with freshness_disabled():
    for k in range(1, 8):
        o = run_attack(f"replay_msg{k}", seed=k)
        print(f"replay_msg{k} without freshness: {'held' if o.passed else 'accepted replay'}")

###############################################################################
# Guessing a hidden level from its tag, with a bounded number of guesses.
o = run_attack("level_side_channel", level_budget=10**6)
print(o.detail)
