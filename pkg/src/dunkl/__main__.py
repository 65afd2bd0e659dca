"""Module entrypoint for dunkl."""

import dunkl.cli


if __name__ == "__main__":
    raise SystemExit(dunkl.cli.main())
