#!/usr/bin/env python3
"""Solve an MPS/LP file with HiGHS and write the plain-text solution file.

Usage: highs_solve.py MODEL_FILE SOLUTION_FILE TIME_LIMIT_S MIP_REL_GAP

Prints one summary line ``status=<...> objective=<...> gap=<...>`` on stdout.
Exit code 0 whenever HiGHS ran, regardless of model status; 1 on errors.
"""

import sys

import highspy


def main(argv):
    if len(argv) != 5:
        print(__doc__, file=sys.stderr)
        return 1
    model_file, solution_file, time_limit, gap = argv[1:]
    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    h.setOptionValue("time_limit", float(time_limit))
    h.setOptionValue("mip_rel_gap", float(gap))
    h.setOptionValue("threads", 1)
    # the SoE telescoping audit compares to 1e-9 MWh
    h.setOptionValue("primal_feasibility_tolerance", 1e-9)
    h.setOptionValue("mip_feasibility_tolerance", 1e-9)
    if h.readModel(model_file) == highspy.HighsStatus.kError:
        print(f"could not read {model_file}", file=sys.stderr)
        return 1
    h.run()
    status = h.modelStatusToString(h.getModelStatus())
    info = h.getInfo()
    is_mip = any(t != highspy.HighsVarType.kContinuous for t in h.getLp().integrality_)
    mip_gap = info.mip_gap if is_mip else 0.0
    h.writeSolution(solution_file, 0)
    print(f"status={status.replace(' ', '_')} objective={info.objective_function_value!r} gap={mip_gap!r}")
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv))
