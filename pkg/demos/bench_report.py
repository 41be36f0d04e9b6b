"""
Costs: bits on the wire and time per primitive
==============================================

Measured figures sit next to the reference ones. They are not expected
to match: point and ciphertext sizes differ, and so does the hardware.
"""
import random

from lda2iot.bench import count_bits, measure_rtd, render_bits, render_rtd, render_timing, time_primitives
from lda2iot.runtime import Deployment

dep = Deployment.create([1], [3], rng=random.Random(7))
print(render_bits(count_bits(dep.session().trace)))

###############################################################################
# Primitive timings on this host (milliseconds).
print()
print(render_timing(time_primitives(trials=50, rng=random.Random(1))))

###############################################################################
# Round trips on the in-process bus; a denied pair costs the gateway more
# because it walks every level before giving up.
print()
print(render_rtd(measure_rtd(runs=20, seed=3)))
