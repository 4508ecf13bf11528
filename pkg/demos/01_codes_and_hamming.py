"""
Sign codes, packing and Hamming search
======================================

A hash layer maps each feature vector to K signs. Packed into 64-bit
words, the Hamming distance between two codes is a popcount, and it
carries exactly the same information as the cosine of the +-1 vectors.
"""

import numpy as np

from sdchash import init_model, pack, search_topk, sign_codes, unpack
from sdchash.hashing import forward

rng = np.random.default_rng(0)
x = rng.standard_normal((6, 10))

# a random 16-bit hash layer; f is the continuous code, b its signs
model = init_model(10, 16, seed=0)
f = forward(model, x)
b = sign_codes(f)
print("first code:", "".join("1" if v > 0 else "0" for v in b[0]))

# packing is lossless and puts bit j of a row into word j // 64, LSB first
codes = pack(b)
assert np.array_equal(unpack(codes), b)
print("packed words:", codes.words[:, 0])

# popcount distance against the cosine identity d = K/2 (1 - cos)
d01 = int(np.bitwise_count(codes.words[0] ^ codes.words[1]).sum())
cos01 = b[0] @ b[1] / 16
print(f"hamming(0, 1) = {d01}, K/2(1-cos) = {16 / 2 * (1 - cos01):g}")

# exhaustive top-3 search of each code against all six
for r in search_topk(codes, codes, k=3):
    print(f"query {r.query_index}: neighbours {r.indices.tolist()} at distances {r.distances.tolist()}")
