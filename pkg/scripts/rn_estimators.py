"""Plain vs conditional estimators of the mean RN weight (should be 1).

python3 scripts/rn_estimators.py --paths 100000 --seeds 0 1 2
"""

import argparse

from dbgkit.sde import SimConfig
from dbgkit.specfun import ModelParams
from dbgkit.verify import check_rn_martingale

p = argparse.ArgumentParser()
p.add_argument("--paths", type=int, default=100000)
p.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2])
p.add_argument("--alpha", type=float, default=0.25)
p.add_argument("--beta", type=float, default=1.0)
p.add_argument("--x0", type=float, default=0.5)
p.add_argument("--t", type=float, default=0.5)
args = p.parse_args()

print("seed  plain mean  plain se  plain kurt   cond mean  cond se")
for s in args.seeds:
    cfg = SimConfig(dt=args.t, horizon=args.t, n_paths=args.paths, master_seed=s, scheme="exact")
    r = check_rn_martingale(ModelParams(args.alpha, args.beta), args.x0, args.t, cfg)
    pl, co = r.extra["plain"], r.extra["conditional"]
    print(f"{s:4d}  {pl['mean']:.5f}    {pl['stderr']:.5f}  {pl['kurtosis']:9.1f}   {co['mean']:.5f}    {co['stderr']:.5f}")
