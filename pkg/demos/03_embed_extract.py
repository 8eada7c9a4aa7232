"""End-to-end embedding with online ambiguity detection and reset.

The sender conditions every step on the receiver-view sequence, checks
after each token whether the text re-tokenizes the way plain appending
predicts, and on a mismatch decodes the new view from scratch and
adopts its pointer and mask state.  Damage stays confined to the
fragments of the affected positions.
"""

import random

from retoksync import toys
from retoksync.bits import random_bits
from retoksync.core import RunParams, embed, extract_detailed

world = toys.rich_world()
params = RunParams(
    profile=world.profile,
    provider=world.provider(),
    key=bytes(range(16)),
    k=6,
    precision=30,
)

rng = random.Random(7)
payload = random_bits(rng, 64)
print("payload:", payload)

run = embed(payload, (), params, view_tokens=30)
print(f"\nstego text: {run.stego_text!r}")
print(f"true tokens {run.generated_tokens}, view tokens {run.view_tokens}, "
      f"pointer {run.pointer}, events {len(run.events)}")
for e in run.events:
    pred = [world.profile.token_bytes[t].decode() for t in e.pred]
    retok = [world.profile.token_bytes[t].decode() for t in e.retok]
    print(f"  step {e.step}: {pred} re-tokenized as {retok}; "
          f"pointer {e.j_before} -> {e.j_after}")

result = extract_detailed(run.stego_text, (), params)
n = min(len(result.bits), len(payload))
errors = sum(a != b for a, b in zip(result.bits[:n], payload[:n]))
print(f"\nreceiver extracted {result.pointer} bits, {errors} wrong "
      f"({'exact' if errors == 0 else 'residual errors, repairable by the correction channel'})")

print("\nper-position ledger (token, receiver fragment, intended):")
for entry in run.sender_ledger[:12]:
    marker = "" if entry.receiver_fragment == entry.intended_fragment else "   <- mismatch"
    surface = world.profile.token_bytes[entry.token].decode()
    print(f"  {surface!r:7} {entry.receiver_fragment!r:10} {entry.intended_fragment!r:10}{marker}")
print("  ...")
