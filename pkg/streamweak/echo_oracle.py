"""Reference external oracle: f(S) = |S| / n.

Run as ``python -m streamweak.echo_oracle --n 6``. ``--garble`` answers the
given request number with a line that is not JSON. ``--sleep-ms`` delays
every answer, ``--sleep-first-ms`` only the first one. They exist to
exercise error handling.
"""

import json
import sys
import time

import click


@click.command()
@click.option("--n", "n", type=int, required=True, help="Ground set size announced in the handshake.")
@click.option("--garble", type=int, default=-1, help="Request number answered with garbage.")
@click.option("--sleep-ms", type=int, default=0, help="Delay before every answer.")
@click.option("--sleep-first-ms", type=int, default=0, help="Delay before the first answer only.")
def main(n: int, garble: int, sleep_ms: int, sleep_first_ms: int) -> None:
    print(json.dumps({"ready": True, "n": n}), flush=True)
    for count, line in enumerate(sys.stdin):
        request = json.loads(line)
        if sleep_ms:
            time.sleep(sleep_ms / 1000.0)
        if count == 0 and sleep_first_ms:
            time.sleep(sleep_first_ms / 1000.0)
        if count == garble:
            print("not json", flush=True)
            continue
        value = len(request["subset"]) / n
        print(json.dumps({"id": request["id"], "value": value}), flush=True)


if __name__ == "__main__":
    main()  # pylint: disable=no-value-for-parameter
