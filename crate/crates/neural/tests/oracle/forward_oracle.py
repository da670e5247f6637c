# Straight-line forward pass of a 2-feature, lookback-3 model with
# formula-defined weights. Plain floats only.
import math

D, HG, HL, E, L = 2, 2, 3, 2, 3

def w(tensor, k):
    return 0.5 * math.sin(0.7 * k + 1.1 * tensor + 0.3)

def matrix(tensor, rows, cols):
    return [[w(tensor, r * cols + c) for c in range(cols)] for r in range(rows)]

def vector(tensor, n):
    return [w(tensor, k) for k in range(n)]

def sig(a):
    return 1.0 / (1.0 + math.exp(-a))

Wg = matrix(0, D, 3 * HG)
Ug = matrix(1, HG, 3 * HG)
bg = vector(2, 3 * HG)
bg2 = vector(3, 3 * HG)
Wl = matrix(4, HG, 4 * HL)
Ul = matrix(5, HL, 4 * HL)
bl = vector(6, 4 * HL)
Wd = matrix(7, HL, E)
bd = [b + 0.5 for b in vector(8, E)]
Wo = matrix(9, E, 1)
bo = vector(10, 1)

x = [[math.cos(0.9 * t + 1.7 * d) for d in range(D)] for t in range(L)]

h = [0.0] * HG
hl = [0.0] * HL
cl = [0.0] * HL
for t in range(L):
    z, r, hn = [], [], []
    for j in range(HG):
        az = sum(x[t][d] * Wg[d][j] for d in range(D)) + sum(h[k] * Ug[k][j] for k in range(HG)) + bg[j] + bg2[j]
        ar = sum(x[t][d] * Wg[d][HG + j] for d in range(D)) + sum(h[k] * Ug[k][HG + j] for k in range(HG)) + bg[HG + j] + bg2[HG + j]
        z.append(sig(az))
        r.append(sig(ar))
    for j in range(HG):
        ah = sum(x[t][d] * Wg[d][2 * HG + j] for d in range(D)) + sum(r[k] * h[k] * Ug[k][2 * HG + j] for k in range(HG)) + bg[2 * HG + j] + bg2[2 * HG + j]
        cand = math.tanh(ah)
        hn.append((1 - z[j]) * h[j] + z[j] * cand)
    h = hn
    a = [sum(h[k] * Wl[k][j] for k in range(HG)) + sum(hl[k] * Ul[k][j] for k in range(HL)) + bl[j] for j in range(4 * HL)]
    cn, hln = [], []
    for j in range(HL):
        i, f, g, o = sig(a[j]), sig(a[HL + j]), math.tanh(a[2 * HL + j]), sig(a[3 * HL + j])
        c = f * cl[j] + i * g
        cn.append(c)
        hln.append(o * math.tanh(c))
    cl, hl = cn, hln

dense = [max(0.0, sum(hl[k] * Wd[k][j] for k in range(HL)) + bd[j]) for j in range(E)]
y = sum(dense[j] * Wo[j][0] for j in range(E)) + bo[0]
print(repr(y))
