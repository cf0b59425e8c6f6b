#!/usr/bin/env python3
"""Minimal external-agent bridge: replays a schedule JSON over the
line-delimited JSON wire protocol (turn in on stdin, action out on stdout).

Usage: replay_bridge.py <schedule.json> [--garble] [--stall]
  --garble  reply with malformed JSON (protocol-violation fixture)
  --stall   never reply (timeout fixture)
"""
import json
import sys
import time


def main() -> None:
    plan = {}
    if len(sys.argv) > 1 and not sys.argv[1].startswith("--"):
        with open(sys.argv[1], encoding="utf-8") as fh:
            schedule = json.load(fh)
        plan = {entry["minute"]: entry["text"] for entry in schedule["timeline"]}
    garble = "--garble" in sys.argv
    stall = "--stall" in sys.argv

    for line in sys.stdin:
        msg = json.loads(line)
        if msg.get("type") == "end":
            return
        if stall:
            time.sleep(3600)
        if garble:
            print("this is not json", flush=True)
            continue
        minute = int(msg["prompt"].split("t=")[1].split(",")[0])
        print(json.dumps({"type": "action", "text": plan.get(minute, "wait")}), flush=True)


if __name__ == "__main__":
    main()
