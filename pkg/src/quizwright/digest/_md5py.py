"""Pure-Python MD5 kernel: four-round compression over 512-bit blocks,
message padded to 448 mod 512 bits plus the 64-bit little-endian length,
state A,B,C,D output little-endian.  Used when the compiled kernel is
unavailable or explicitly disabled."""

import struct

_MASK = 0xFFFFFFFF

# sine-derived round constants
_T = [
    0xD76AA478, 0xE8C7B756, 0x242070DB, 0xC1BDCEEE,
    0xF57C0FAF, 0x4787C62A, 0xA8304613, 0xFD469501,
    0x698098D8, 0x8B44F7AF, 0xFFFF5BB1, 0x895CD7BE,
    0x6B901122, 0xFD987193, 0xA679438E, 0x49B40821,
    0xF61E2562, 0xC040B340, 0x265E5A51, 0xE9B6C7AA,
    0xD62F105D, 0x02441453, 0xD8A1E681, 0xE7D3FBC8,
    0x21E1CDE6, 0xC33707D6, 0xF4D50D87, 0x455A14ED,
    0xA9E3E905, 0xFCEFA3F8, 0x676F02D9, 0x8D2A4C8A,
    0xFFFA3942, 0x8771F681, 0x6D9D6122, 0xFDE5380C,
    0xA4BEEA44, 0x4BDECFA9, 0xF6BB4B60, 0xBEBFBC70,
    0x289B7EC6, 0xEAA127FA, 0xD4EF3085, 0x04881D05,
    0xD9D4D039, 0xE6DB99E5, 0x1FA27CF8, 0xC4AC5665,
    0xF4292244, 0x432AFF97, 0xAB9423A7, 0xFC93A039,
    0x655B59C3, 0x8F0CCC92, 0xFFEFF47D, 0x85845DD1,
    0x6FA87E4F, 0xFE2CE6E0, 0xA3014314, 0x4E0811A1,
    0xF7537E82, 0xBD3AF235, 0x2AD7D2BB, 0xEB86D391,
]

# per-step rotation amounts and message word order
_SHIFTS = (
    (7, 12, 17, 22), (5, 9, 14, 20), (4, 11, 16, 23), (6, 10, 15, 21),
)
_INDEX = [
    list(range(16)),
    [(1 + 5 * i) % 16 for i in range(16)],
    [(5 + 3 * i) % 16 for i in range(16)],
    [(7 * i) % 16 for i in range(16)],
]

_UNPACK16 = struct.Struct("<16I").unpack


# (shift, message index, constant) per step, one tuple per round
_STEPS = [
    [(_SHIFTS[r][i & 3], _INDEX[r][i], _T[r * 16 + i]) for i in range(16)]
    for r in range(4)
]


def _compress(state, block):
    a0, b0, c0, d0 = state
    m = _UNPACK16(block)
    a, b, c, d = a0, b0, c0, d0

    for s, k, t in _STEPS[0]:
        tmp = (a + (d ^ (b & (c ^ d))) + m[k] + t) & _MASK
        a, d, c, b = d, c, b, (b + (((tmp << s) | (tmp >> (32 - s))) & _MASK)) & _MASK
    for s, k, t in _STEPS[1]:
        tmp = (a + (c ^ (d & (b ^ c))) + m[k] + t) & _MASK
        a, d, c, b = d, c, b, (b + (((tmp << s) | (tmp >> (32 - s))) & _MASK)) & _MASK
    for s, k, t in _STEPS[2]:
        tmp = (a + (b ^ c ^ d) + m[k] + t) & _MASK
        a, d, c, b = d, c, b, (b + (((tmp << s) | (tmp >> (32 - s))) & _MASK)) & _MASK
    for s, k, t in _STEPS[3]:
        tmp = (a + (c ^ (b | (~d & _MASK))) + m[k] + t) & _MASK
        a, d, c, b = d, c, b, (b + (((tmp << s) | (tmp >> (32 - s))) & _MASK)) & _MASK

    return ((a0 + a) & _MASK, (b0 + b) & _MASK,
            (c0 + c) & _MASK, (d0 + d) & _MASK)


def md5_bytes(message: bytes) -> bytes:
    """Digest of ``message`` as 16 raw bytes."""
    length = len(message)
    padding = b"\x80" + b"\x00" * ((55 - length) % 64)
    padded = message + padding + struct.pack("<Q", (length * 8) & 0xFFFFFFFFFFFFFFFF)

    state = (0x67452301, 0xEFCDAB89, 0x98BADCFE, 0x10325476)
    for off in range(0, len(padded), 64):
        state = _compress(state, padded[off:off + 64])
    return struct.pack("<4I", *state)
