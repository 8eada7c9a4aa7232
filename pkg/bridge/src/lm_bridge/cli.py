"""lm-bridge command line: serve the protocol or export the tokenizer.

  lm-bridge serve --model toy:7 --stdio
  lm-bridge serve --model toy:7 --bind 127.0.0.1:9000
  lm-bridge profile-export --model toy:7 --vocab-out v.txt --merges-out m.txt
"""

from __future__ import annotations

import argparse
import sys

from . import __version__
from .model import load_backend
from .server import BridgeServer, export_profile


def cmd_serve(args) -> int:
    backend = load_backend(args.model)
    server = BridgeServer(backend)
    if args.stdio or not args.bind:
        server.serve_stdio(sys.stdin, sys.stdout)
        return 0
    host, _, port = args.bind.rpartition(":")
    if not host or not port.isdigit():
        print(f"--bind must be host:port, got {args.bind!r}", file=sys.stderr)
        return 2
    tcp = server.serve_tcp(host, int(port))
    print(f"serving {args.model} on {tcp.server_address[0]}:{tcp.server_address[1]}", file=sys.stderr)
    try:
        tcp.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        tcp.server_close()
    return 0


def cmd_profile_export(args) -> int:
    backend = load_backend(args.model)
    export_profile(backend, args.vocab_out, args.merges_out)
    print(f"exported {backend.tokenizer.vocab_size} tokens, "
          f"{len(backend.tokenizer.merges)} merges")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="lm-bridge")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("serve", help="answer the line protocol")
    p.add_argument("--model", default="toy:0", help="toy:<seed> or hf:<name>")
    p.add_argument("--stdio", action="store_true", help="serve on stdin/stdout")
    p.add_argument("--bind", help="serve on host:port")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("profile-export", help="dump the tokenizer profile files")
    p.add_argument("--model", default="toy:0")
    p.add_argument("--vocab-out", required=True)
    p.add_argument("--merges-out", required=True)
    p.set_defaults(func=cmd_profile_export)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
