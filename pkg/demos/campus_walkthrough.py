"""
A campus deployment, end to end
===============================

Five staff levels, a handful of sensors, and the gateway in between.
Each allowed pair agrees on a session key; each denied pair gets the
0 signal and nothing else.
"""
import random

from lda2iot.runtime import Deployment

# level 1 is the most privileged: a level-l user may reach sensors at level >= l
staff = {"director": 1, "dean": 2, "hod": 3, "faculty": 4, "clerk": 5}
rooms = {"director-office": 1, "lab": 3, "canteen": 5}

dep = Deployment.create(list(staff.values()), list(rooms.values()), rng=random.Random(2024))

###############################################################################
# Run every user against every room.
for i, who in enumerate(staff):
    for j, room in enumerate(rooms):
        out = dep.session(i, j)
        if out.agreed:
            note = "key " + out.user_key.hex()[:16] + "..."
        else:
            note = out.status + ", aborts to " + ", ".join(sorted(r.value for r in out.aborts_delivered))
        print(f"{who:9s} -> {room:16s} {note}")

###############################################################################
# What actually crossed the bus for one allowed session.
out = dep.session(0, 2)
for env in out.trace:
    print(f"{env.topic:40s} {len(env.payload):5d} bytes")
