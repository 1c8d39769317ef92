# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled MD5 kernel: same contract as ``_md5py.md5_bytes``, C-speed
block compression for the hot digest path (answer keys, seeds, auth)."""

from libc.stdint cimport uint8_t, uint32_t, uint64_t
from libc.string cimport memcpy, memset


cdef uint32_t[64] T
T = [
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

cdef uint8_t[64] S
S = [
    7, 12, 17, 22, 7, 12, 17, 22, 7, 12, 17, 22, 7, 12, 17, 22,
    5, 9, 14, 20, 5, 9, 14, 20, 5, 9, 14, 20, 5, 9, 14, 20,
    4, 11, 16, 23, 4, 11, 16, 23, 4, 11, 16, 23, 4, 11, 16, 23,
    6, 10, 15, 21, 6, 10, 15, 21, 6, 10, 15, 21, 6, 10, 15, 21,
]


cdef inline uint32_t rotl(uint32_t x, int s) nogil:
    return (x << s) | (x >> (32 - s))


cdef void compress(uint32_t* state, const uint8_t* block) nogil:
    cdef uint32_t m[16]
    cdef uint32_t a, b, c, d, f, tmp
    cdef int i, k

    for i in range(16):
        m[i] = (<uint32_t>block[4 * i]
                | (<uint32_t>block[4 * i + 1] << 8)
                | (<uint32_t>block[4 * i + 2] << 16)
                | (<uint32_t>block[4 * i + 3] << 24))

    a = state[0]; b = state[1]; c = state[2]; d = state[3]

    for i in range(64):
        if i < 16:
            f = d ^ (b & (c ^ d))
            k = i
        elif i < 32:
            f = c ^ (d & (b ^ c))
            k = (1 + 5 * i) % 16
        elif i < 48:
            f = b ^ c ^ d
            k = (5 + 3 * i) % 16
        else:
            f = c ^ (b | (~d))
            k = (7 * i) % 16
        tmp = d
        d = c
        c = b
        b = b + rotl(a + f + m[k] + T[i], S[i])
        a = tmp

    state[0] += a; state[1] += b; state[2] += c; state[3] += d


def md5_bytes(data) -> bytes:
    """Digest of ``data`` as 16 raw bytes."""
    cdef const uint8_t[::1] view = data
    cdef Py_ssize_t n = view.shape[0]
    cdef const uint8_t* buf = NULL
    cdef uint32_t state[4]
    cdef uint8_t tail[128]
    cdef Py_ssize_t off = 0, rest, tail_len
    cdef uint64_t bit_len = <uint64_t>n * 8
    cdef int i

    if n > 0:
        buf = &view[0]
    state[0] = 0x67452301
    state[1] = 0xEFCDAB89
    state[2] = 0x98BADCFE
    state[3] = 0x10325476

    with nogil:
        while off + 64 <= n:
            compress(state, buf + off)
            off += 64

    rest = n - off
    memset(tail, 0, 128)
    if rest > 0:
        memcpy(tail, buf + off, rest)
    tail[rest] = 0x80
    tail_len = 64 if rest < 56 else 128
    for i in range(8):
        tail[tail_len - 8 + i] = <uint8_t>((bit_len >> (8 * i)) & 0xFF)
    compress(state, tail)
    if tail_len == 128:
        compress(state, tail + 64)

    out = bytearray(16)
    for i in range(4):
        out[4 * i] = state[i] & 0xFF
        out[4 * i + 1] = (state[i] >> 8) & 0xFF
        out[4 * i + 2] = (state[i] >> 16) & 0xFF
        out[4 * i + 3] = (state[i] >> 24) & 0xFF
    return bytes(out)
