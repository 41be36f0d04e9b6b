"""Actors, message bus, wire codec and persistent stores."""
from .actors import (
    DEFAULT_HOP_MS,
    GatewayActor,
    Receipt,
    SensorActor,
    SessionOutcome,
    TopicScheme,
    UserActor,
    VirtualClock,
    WallClock,
    device_address,
    drive,
    fingerprint,
    publish_all,
    run_session,
    session_id,
)
from .bus import Envelope, MessageBus, Subscription, topic_matches
from .store import (
    card_dumps,
    card_load,
    card_loads,
    card_save,
    registry_load,
    registry_load_all,
    registry_save,
)
from .wire import decode_wire, encode_wire
from .deploy import Deployment, EnrolledSensor, EnrolledUser
