"""Level-dependent two-factor authentication and key agreement for IoT.

A user with a smart card and password logs in and agrees a session key with
a sensing device through a gateway, which releases the key only when the
user's level reaches the sensor's level.

Subpackages: ``crypto`` (curve arithmetic, hashing, payload encryption),
``protocol`` (state and per-message step functions), ``runtime`` (actors,
bus, wire codec, stores), ``adversary`` (channel attacks and the
real-or-random game) and ``bench`` (cost accounting and timing).
"""
from . import adversary, bench, crypto, errors, protocol, runtime
from .runtime import Deployment, run_session

__version__ = "0.1.0"
