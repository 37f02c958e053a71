#!/usr/bin/env python3
"""Build the two end-to-end certificate instances and certify them.

Writes four instance files into --out-dir:

  sum_family_lam.json / sum_family_phi.json
      a tiny signed deviation part plus a bounded nonnegative summand; the
      sum-family certificate (CLI: ``boxlab pseudorandom thm42``) should
      return verdict "true" on them.

  near_majorant_nu.json / near_majorant_psi.json
      a density close to a pseudorandom majorant in box norm; the
      near-majorant certificate (CLI: ``boxlab pseudorandom thm43``) should
      return verdict "true" on them.

Prints the parameters, file digests, verdicts, and ready-to-run CLI lines.
Exits 0 only if both certificates come back "true".
"""

import argparse
import os
import sys

from boxlab.instances import emit_json, save_instance
from boxlab.pseudo import sum_family_certificate, near_majorant_certificate
from boxlab.suite import build_sum_family_instance, build_near_majorant_instance


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out-dir", default="certificate_instances")
    ap.add_argument("--seed", type=int, default=109)
    args = ap.parse_args()
    os.makedirs(args.out_dir, exist_ok=True)

    def path(name: str) -> str:
        return os.path.join(args.out_dir, name)

    verdicts = {}

    system, lam, phi, C, eta, p = build_sum_family_instance(seed=args.seed)
    lam_digest = save_instance(path("sum_family_lam.json"), system, lam)
    phi_digest = save_instance(path("sum_family_phi.json"), system, phi)
    cert = sum_family_certificate(system, lam, phi, C, eta, p, mode="exact")
    verdicts["sum_family"] = cert.verdict
    print(
        emit_json(
            {
                "certificate": "sum_family",
                "C": C,
                "eta": eta,
                "p": str(p),
                "lam_digest": lam_digest,
                "phi_digest": phi_digest,
                "verdict": cert.verdict,
                "hypotheses": cert.hypotheses,
                "constants": cert.constants,
            }
        )
    )
    print(
        "# boxlab pseudorandom thm42 --instance {} --psi {} --C {} --eta {} "
        "--p inf --mode exact".format(
            path("sum_family_lam.json"), path("sum_family_phi.json"), C, repr(eta)
        )
    )

    system, nu, psi, C, eta, p, delta = build_near_majorant_instance(seed=args.seed + 1)
    nu_digest = save_instance(path("near_majorant_nu.json"), system, nu)
    psi_digest = save_instance(path("near_majorant_psi.json"), system, psi)
    cert = near_majorant_certificate(system, nu, psi, C, eta, p, mode="exact")
    verdicts["near_majorant"] = cert.verdict
    print(
        emit_json(
            {
                "certificate": "near_majorant",
                "C": C,
                "eta": eta,
                "p": str(p),
                "bump_size": delta,
                "nu_digest": nu_digest,
                "psi_digest": psi_digest,
                "verdict": cert.verdict,
                "hypotheses": cert.hypotheses,
                "constants": cert.constants,
            }
        )
    )
    print(
        "# boxlab pseudorandom thm43 --instance {} --psi {} --C {} --eta {} "
        "--p inf --mode exact".format(
            path("near_majorant_nu.json"), path("near_majorant_psi.json"), C, repr(eta)
        )
    )

    return 0 if all(v == "true" for v in verdicts.values()) else 1


if __name__ == "__main__":
    sys.exit(main())
