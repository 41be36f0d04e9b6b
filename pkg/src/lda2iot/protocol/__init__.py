"""Protocol state and the pure step functions of every phase."""
from .access import (
    Access,
    access_check,
    check_freshness,
    freshness_disabled,
    lda_decide,
    level_tag,
    recover_level,
)
from .exchange import (
    build_msg1,
    gw_handle_msg1,
    gw_handle_msg3,
    gw_handle_msg5,
    login_and_build_msg1,
    sensor_handle_msg2,
    sensor_handle_msg4,
    sensor_handle_msg7,
    session_key,
    user_handle_msg6,
)
from .setup import (
    gateway_init,
    login_verify,
    register_user,
    register_user_begin,
    register_user_finalize,
    register_user_gateway,
    sensor_init,
    user_init,
)
from .types import (
    DEFAULT_DELTA_T_MS,
    DEFAULT_L_MAX,
    IDENTITY_BYTES,
    MESSAGE_TYPES,
    PAYLOAD_SCHEMAS,
    Abort,
    CardDraft,
    GatewaySession,
    GatewayState,
    Identity,
    Msg1,
    Msg2,
    Msg3,
    Msg4,
    Msg5,
    Msg6,
    Msg7,
    Phase,
    RegistrationHeld,
    RegistrationRequest,
    Role,
    SensorCredentials,
    SensorSession,
    SessionContext,
    SmartCard,
    UserCredentials,
    UserSession,
    timestamp_of,
)
