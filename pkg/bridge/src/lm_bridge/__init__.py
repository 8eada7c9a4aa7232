"""Bridge server: exposes a language model's next-token distributions
and its tokenizer profile over a newline-delimited JSON protocol, in the
file formats the steganography toolkit consumes."""

__version__ = "0.1.0"
