"""Train a byte-level BPE profile and watch re-tokenization ambiguity.

The same surface text can be produced by different token sequences; the
receiver only ever sees the text, so it re-encodes it and may get a
different sequence than the one the sender generated.  This script
trains a tiny profile, shows the pre-segmentation rules, and constructs
the classic merge case where two tokens collapse into one.
"""

from retoksync import toys
from retoksync.tokenizer import pre_segment, train_bpe

corpus = (
    "the cat sat on the mat. the cat ate anything, anything at all.\n"
    "any thing the cat saw, it ate. the mat sat there.\n"
) * 4

profile = train_bpe(corpus, 300)
print(f"trained {profile.vocab_size} tokens, {len(profile.merges)} merges")
print("first merges:", [
    (profile.token_bytes[l] + b"+" + profile.token_bytes[r]).decode()
    for l, r, _ in profile.merges[:8]
])

print("\npre-segmentation (whitespace attaches forward, punctuation isolated):")
for seg in pre_segment("the cat, anything at all."):
    print(f"  {seg.start_offset:3d}: {seg.data!r}")

print("\nambiguity from a learned merge:")
left, right, merged = profile.merges[0]
pair = [left, right]
text = profile.decode_bytes(pair)
print(f"  sender emits     {pair} = {text!r} as two tokens")
print(f"  receiver encodes {text!r} back to {profile.encode(text)}")
print("  the sequences differ: that position re-tokenized")

print("\nthe showcase chain: 'any' + 'thing' -> 'anything'")
world = toys.anything_world()
p = world.profile
any_id = p.token_bytes.index(b"any")
thing_id = p.token_bytes.index(b"thing")
print(f"  emit {[any_id, thing_id]} -> text {p.decode([any_id, thing_id])!r}")
print(f"  receiver sees {p.encode('anything')} = [{p.token_bytes[p.encode('anything')[0]].decode()}]")
