"""Toppling order does not matter: replaying one instruction tape.

A configuration plus a fixed per-site instruction tape determines the
final state no matter which active site topples first.  We replay one
tape under five scheduling policies, byte-serialize it, and replay the
deserialized copy.
"""

from arwlab import arw
from arwlab.model import Params

n, p, q = 8, 0.5, 0.3
params = Params(n=n, p=p, q=q)
policies = ["fifo", "lifo", "lowest", "highest", "random:99"]

tape = arw.InstructionTape(n, p, q, seed=20240817)
print(f"stabilizing one active particle per site at n={n} under each policy:")
for policy in policies:
    config = arw.Configuration.all_ones(n)
    tape.reset_cursors()
    out = arw.stabilize(config, params, tape, policy=policy)
    print(f"  {policy:10s} sleeping={out.sleeping} jumps={out.jump_count} "
          f"asleep-at={sorted(map(int, config.asleep.nonzero()[0]))}")

ok = arw.check_abelian(n, arw.Configuration.all_ones(n), tape, policies)
print(f"\ncheck_abelian over all five policies: {ok}")

blob = tape.serialize()
clone = arw.InstructionTape.deserialize(blob, p, q)
config = arw.Configuration.all_ones(n)
out = arw.stabilize(config, params, clone)
print(f"replay from {len(blob)} serialized bytes: sleeping={out.sleeping} "
      f"jumps={out.jump_count} (identical by construction)")
