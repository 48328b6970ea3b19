"""Exact-arithmetic private sequential variable-length coding.

Rational probability tables, constructive functional-representation
mechanisms, one-time-pad plus prefix-free slot coding, enumeration-based
zero-leakage audits, achievable/converse length bounds, and a coded-caching
delivery application.
"""

from .errors import InvariantError, LimitError, ValidationError
from .probability import Alphabet, JointDist, load_dist, parse_dist, format_dist, point_mass, uniform
from .frl import (
    FrlMechanism,
    MechanismChain,
    build_chain,
    canonical_ordering,
    cardinality_bound,
    frl_construct,
    frl_extend,
    mechanism_entropy,
    min_entropy_search,
    new_chain,
)
from .coding import (
    Codebook,
    PadKey,
    entropy_codebook,
    fixed_length_codebook,
    otp_decrypt,
    otp_encrypt,
    verify_prefix_free,
)
from .pipeline import (
    FixedDraws,
    RandomDraws,
    Transcript,
    TranscriptDistribution,
    decode_session,
    encode_session,
    enumerate_outcomes,
    expected_length,
    leakage_audit,
    session_chain,
    transcript_distribution,
    worst_case_sweep,
)
from .bounds import (
    BoundReport,
    Example1Params,
    example1_build,
    example1_ratio,
    lower_bound,
    upper_bound_cardinality,
    upper_bound_entropy_estimate,
)
from .caching import (
    BlockStream,
    CacheConfig,
    CacheSession,
    PublicCache,
    UserCache,
    delivery_blocks,
    make_cache_session,
    placement,
    private_wrap,
    delivery_bound,
    user_decode,
)

__version__ = "0.1.0"
