"""Validate JSON read from stdin against a schema file."""
import json
import sys

import jsonschema


def main() -> int:
    schema = json.load(open(sys.argv[1]))
    document = json.load(sys.stdin)
    jsonschema.validate(document, schema)
    print("valid")
    return 0


if __name__ == "__main__":
    sys.exit(main())
