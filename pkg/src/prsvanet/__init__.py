"""Conditional privacy-preserving VANET authentication via proxy re-signatures."""

from .actors import (
    OnBoardUnit,
    Reason,
    RevocationList,
    RoadsideUnit,
    ThresholdPolicy,
    TrustedAuthority,
    Verdict,
    obu_generate,
    vehicle_verify_broadcast,
)
from .messages import Broadcast, Envelope, SafetyMessage
from .scheme import (
    Level1Signature,
    Level2Signature,
    ReSignKey,
    make_registration_proof,
    make_resign_key,
    resign,
    sign_level1,
    ta_keygen,
    vehicle_keygen,
    rsu_keygen,
    verify_level1,
    verify_level2,
    verify_registration_proof,
)

__version__ = "0.1.0"
