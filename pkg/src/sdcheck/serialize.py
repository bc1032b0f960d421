"""File formats: instance JSON, trace/curves CSV, report and reduction JSON.

All floats are rendered with 17 significant digits so that runs with the same
configuration serialize to byte-identical files; matrices are stored row-major.
"""
import json

import numpy as np

from .exceptions import InvalidSpec
from .spectrahedron import Certificate, FaceRep, LinearMapA, Spectrahedron


def fmt17(x):
    """Render one float with 17 significant digits (round-trip exact)."""
    return format(float(x), ".17g")


def _encode(obj):
    """Deterministic JSON with fixed float formatting; insertion order kept."""
    if obj is None:
        return "null"
    if obj is True:
        return "true"
    if obj is False:
        return "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return fmt17(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        return _encode(obj.tolist())
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(_encode(v) for v in obj) + "]"
    if isinstance(obj, dict):
        items = (f"{json.dumps(str(k))}: {_encode(v)}" for k, v in obj.items())
        return "{" + ", ".join(items) + "}"
    raise TypeError(f"cannot encode {type(obj)!r}")


def dump_json(obj, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(_encode(obj))
        fh.write("\n")


def dumps_json(obj):
    return _encode(obj)


def _mat_flat(M):
    return [float(v) for v in np.asarray(M, dtype=float).reshape(-1)]


def _mat_rows(M):
    return [[float(v) for v in row] for row in np.asarray(M, dtype=float)]


def instance_to_dict(F):
    """Shared instance schema: n, m, row-major mats, b, optional certificate."""
    amap = F.map
    doc = {
        "n": amap.n,
        "m": amap.m,
        "mats": [_mat_flat(A) for A in amap.mats],
        "b": [float(v) for v in amap.b],
    }
    cert = F.certificate
    if cert is not None:
        cdoc = {}
        if cert.sd_true is not None:
            cdoc["sd_true"] = int(cert.sd_true)
        if cert.max_rank_true is not None:
            cdoc["max_rank_true"] = int(cert.max_rank_true)
        if cert.solution_face is not None:
            cdoc["solution_face"] = {
                "V": _mat_rows(cert.solution_face.V),
                "W": _mat_flat(cert.solution_face.W),
            }
        if cert.singleton_solution is not None:
            cdoc["singleton_solution"] = _mat_flat(cert.singleton_solution)
        if cert.exposing_chain is not None:
            cdoc["exposing_chain"] = [
                {"y": [float(v) for v in y], "Z": _mat_flat(Z)}
                for y, Z in cert.exposing_chain
            ]
        doc["certificate"] = cdoc
    return doc


def _unflatten(flat):
    flat = np.asarray(flat, dtype=float)
    n = int(round(np.sqrt(flat.size)))
    if n * n != flat.size:
        raise InvalidSpec(f"matrix payload of length {flat.size} is not square")
    return flat.reshape(n, n)


def instance_from_dict(doc):
    n = int(doc["n"])
    mats = [_unflatten(m) for m in doc["mats"]]
    if any(A.shape[0] != n for A in mats):
        raise InvalidSpec("constraint matrix order disagrees with 'n'")
    if len(mats) != int(doc["m"]):
        raise InvalidSpec("'m' disagrees with the number of matrices")
    amap = LinearMapA(mats, doc["b"], n=n)
    cert = None
    cdoc = doc.get("certificate")
    if cdoc:
        face = None
        if "solution_face" in cdoc:
            face = FaceRep(
                V=np.asarray(cdoc["solution_face"]["V"], dtype=float).reshape(n, -1),
                W=_unflatten(cdoc["solution_face"]["W"]),
            )
        chain = None
        if "exposing_chain" in cdoc:
            chain = [
                (np.asarray(e["y"], dtype=float), _unflatten(e["Z"]))
                for e in cdoc["exposing_chain"]
            ]
        singleton = None
        if "singleton_solution" in cdoc:
            singleton = _unflatten(cdoc["singleton_solution"])
        cert = Certificate(
            sd_true=cdoc.get("sd_true"),
            max_rank_true=cdoc.get("max_rank_true"),
            solution_face=face,
            singleton_solution=singleton,
            exposing_chain=chain,
        )
    return Spectrahedron(map=amap, certificate=cert)


def write_instance(F, path):
    dump_json(instance_to_dict(F), path)


def read_instance(path):
    with open(path, encoding="utf-8") as fh:
        return instance_from_dict(json.load(fh))


def write_trace_csv(trace, path):
    """One row per (k, i): k,alpha,i,lambda_X,lambda_Z,res_primal,res_dual,res_cent,berr."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("k,alpha,i,lambda_X,lambda_Z,res_primal,res_dual,res_cent,berr\n")
        for j, pt in enumerate(trace.points):
            k = trace.k_start + j
            for i in range(trace.n):
                row = [
                    str(k),
                    fmt17(trace.alphas[j]),
                    str(i + 1),
                    fmt17(trace.eigsX[j, i]),
                    fmt17(trace.eigsZ[j, i]),
                    fmt17(pt.res_primal),
                    fmt17(pt.res_dual),
                    fmt17(pt.res_cent),
                    fmt17(trace.berr[j]),
                ]
                fh.write(",".join(row) + "\n")


def write_curves_csv(curves, path, k_start=1):
    """One row per (i, k): i,k,RQ,RN; cells empty where a curve is undefined."""
    n = curves.n
    K = curves.RN.shape[1]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("i,k,RQ,RN\n")
        for i in range(1, n + 1):
            for j in range(K):
                rq = fmt17(curves.RQ[i - 1, j]) if (i <= n and j < K - 1) else ""
                rn = fmt17(curves.RN[i - 1, j]) if i <= n - 1 else ""
                fh.write(f"{i},{k_start + j},{rq},{rn}\n")


def report_to_dict(report):
    return {
        "r_bar": report.r_bar,
        "eps_lower": report.eps_lower,
        "d_lower": report.d_lower,
        "N_lambda": report.N_lambda,
        "tau": report.tau_used,
        "ladder": [float(v) for v in report.threshold_ladder],
        "liminf_proxy": [float(v) for v in report.liminf_proxy],
        "verdicts": dict(report.verdicts),
    }


def fr_result_to_dict(result):
    return {
        "d": result.d,
        "r": result.r,
        "mode": result.mode,
        "steps": [
            {"q": s.q, "y": [float(v) for v in s.y], "Z": _mat_rows(s.Z)}
            for s in result.steps
        ],
    }


TABLE_COLUMNS = ["instance", "eps_b", "r", "r_bar", "eps_f", "eps_lower",
                 "sd", "d_lower", "N_lambda"]


def write_table(rows, csv_path, txt_path):
    """Aggregated results, one row per run; CSV is canonical, text is padded."""
    def cell(v):
        if v is None:
            return ""
        if isinstance(v, float):
            return fmt17(v)
        return str(v)

    with open(csv_path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(TABLE_COLUMNS) + "\n")
        for row in rows:
            fh.write(",".join(cell(row.get(c)) for c in TABLE_COLUMNS) + "\n")

    def txt_cell(v):
        if v is None:
            return "-"
        if isinstance(v, float):
            return format(v, ".3e")
        return str(v)

    grid = [TABLE_COLUMNS] + [[txt_cell(row.get(c)) for c in TABLE_COLUMNS] for row in rows]
    widths = [max(len(g[i]) for g in grid) for i in range(len(TABLE_COLUMNS))]
    lines = ["  ".join(c.ljust(w) for c, w in zip(g, widths)).rstrip() for g in grid]
    text = "\n".join(lines) + "\n"
    with open(txt_path, "w", encoding="utf-8") as fh:
        fh.write(text)
    return text
