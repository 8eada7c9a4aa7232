"""Two-channel communication: grouped correction over a reliable
auxiliary channel.

Primary samples carry the payload at full efficiency and may keep
sparse residual bit errors after re-tokenization events.  For every
group of n samples the sender ships one extra sample on the pooled
auxiliary channel describing all mismatched fragments; applying it
restores every payload exactly.
"""

from retoksync import toys
from retoksync.core import RunParams
from retoksync.session import SessionConfig, simulate

primary_world = toys.session_world()
aux_world = toys.pool_world()

primary = RunParams(
    profile=primary_world.profile,
    provider=primary_world.provider(),
    key=bytes(range(16)),
    k=12,
    precision=30,
)
aux = RunParams(
    profile=aux_world.profile,
    provider=aux_world.provider(),
    key=bytes(range(16, 32)),
    k=8,
    precision=30,
)

for group_size in (5, 10, 20):
    config = SessionConfig(
        params=primary,
        aux_params=aux,
        group_size=group_size,
        sample_count=10 * group_size,
        sample_length=30,
        seed=42,
    )
    report = simulate(config)
    bit_ratio, token_ratio, corr_ratio = report.error_ratios
    print(f"group size {group_size:2d}: "
          f"success {report.success_rate:.0%}, "
          f"avg residual {report.avg_error:.2f} bits/group, "
          f"avg correction {report.avg_correction_bits:.1f} bits, "
          f"correction/embedding {corr_ratio:.2%}")

print("\nlarger groups amortize the fixed count field over more payload;")
print("all residual errors were repaired in every configuration above.")
