#!/usr/bin/python3

import sys

from toprank.service.service import handle_command


def main():
    if len(sys.argv) < 2:
        print("Usage: toprank <command> [<args>]")
        sys.exit(1)

    sys.exit(handle_command(sys.argv[1:]))


if __name__ == "__main__":
    main()
