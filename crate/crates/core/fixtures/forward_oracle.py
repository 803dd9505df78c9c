"""Independent forward pass for golden_model.json; writes golden_logits.json."""
import json
import os

import numpy as np

here = os.path.dirname(os.path.abspath(__file__))
m = json.load(open(os.path.join(here, "golden_model.json")))
P = {k: np.array(v["data"], dtype=np.float64).reshape(v["rows"], v["cols"]) for k, v in m["params"].items()}
d, hops = m["d"], m["hops"]


def sig(x):
    return 1.0 / (1.0 + np.exp(-x))


def gru(x, h, W, U, b):
    Wz, Wr, Wn = W[:, :d], W[:, d:2 * d], W[:, 2 * d:]
    Uz, Ur, Un = U[:, :d], U[:, d:2 * d], U[:, 2 * d:]
    bz, br, bn = b[0, :d], b[0, d:2 * d], b[0, 2 * d:]
    z = sig(x @ Wz + h @ Uz + bz)
    r = sig(x @ Wr + h @ Ur + br)
    n = np.tanh(x @ Wn + (r * h) @ Un + bn)
    return (1 - z) * n + z * h


h = np.zeros(d)
H = []
for i in m["code_ids"]:
    h = gru(P["emb_in"][i], h, P["enc_w"], P["enc_u"], P["enc_b"])
    H.append(h)
H = np.array(H)

n_nodes = len(m["ast_ids"])
A = np.eye(n_nodes)
for p, c in m["edges"]:
    A[p, c] = A[c, p] = 1.0
A = A / A.sum(axis=1, keepdims=True)
N = P["emb_in"][m["ast_ids"]]
for _ in range(hops):
    N = np.maximum(A @ N @ P["gnn_w"] + N, 0.0)


def attend(K, q):
    e = K @ q
    a = np.exp(e - e.max())
    a /= a.sum()
    return a @ K


s = h
rows = []
for tok in m["prefix"]:
    s = gru(P["emb_out"][tok], s, P["dec_w"], P["dec_u"], P["dec_b"])
    o = np.tanh(np.concatenate([s, attend(H, s), attend(N, s)]) @ P["comb_w"])
    rows.append((o @ P["out_w"] + P["out_b"][0]).tolist())

with open(os.path.join(here, "golden_logits.json"), "w") as f:
    json.dump(rows, f)
    f.write("\n")
