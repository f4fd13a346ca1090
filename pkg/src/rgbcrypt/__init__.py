"""rgbcrypt: a color-oriented cipher that moves bytes around an RGB lattice.

Bytes become points ``(r, g, b)``, keys relocate the points with exact
integer affine maps, and the results are packed back into one residue byte
plus a wrap-around factor and bits-per-axis so they can be framed and sent
over a (simulated) light channel.  This is a teaching cipher, not a secure one.
"""

from .cipher import EncryptedMessage, KeySchedule, decrypt, encrypt, encrypt_block
from .codec import (
    AxisTriple,
    Bpa,
    MangledSymbol,
    Symbol,
    base_view,
    compute_bpa,
    demangle,
    linear_to_3d,
    mangle,
    mod_op,
    polynomial_view,
    relinearize,
)
from .errors import (
    CipherError,
    CodecError,
    DesyncError,
    FramingError,
    InvalidKeyError,
    KeyFileError,
    PreambleError,
    RgbCryptError,
    TransportError,
)
from .framing import Packet, PacketFormat, build_packet, ipr, parse_packet
from .points import (
    HomogeneousPoint,
    KeyOp,
    KeySequence,
    apply_op,
    apply_sequence,
    color_count,
    format_keyfile,
    invert_sequence,
    parse_keyfile,
)
from .transport import light_decode, light_encode, receive, send

__version__ = "0.1.0"
