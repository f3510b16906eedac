"""Two scripted clients exercising the heartbeat and one-to-one call flow."""

import json
import tempfile

from onecast.signaling.messages import make_message
from onecast.signaling.server import SignalingServer
from onecast.signaling.store import AppendStore, KvCache
from onecast.signaling.ws import client_connect


def show(label, msg):
    print(f"  {label}: " + json.dumps({k: v for k, v in msg.items() if v not in ("", "false")}))


with tempfile.TemporaryDirectory() as workdir:
    server = SignalingServer(
        host="127.0.0.1", port=0,
        store=AppendStore(f"{workdir}/store"), cache=KvCache(),
        call_timeout_s=2.0,
    )
    server.start()
    print(f"signaling on port {server.port}")

    alice = client_connect("127.0.0.1", server.port)
    bob = client_connect("127.0.0.1", server.port)
    alice.settimeout(5.0)
    bob.settimeout(5.0)
    alice.send_text("alice")
    bob.send_text("bob")

    print("\nheartbeats announce presence and the stream address:")
    alice.send_text(json.dumps(make_message(
        HeartBeat="true", UserState="Online", StreamAddress="rtsp://alice/live")))
    show("alice <-", json.loads(alice.recv_text()))
    bob.send_text(json.dumps(make_message(HeartBeat="true", UserState="Online")))
    show("bob   <-", json.loads(bob.recv_text()))

    print("\nalice calls bob (server flips Calling -> Called):")
    alice.send_text(json.dumps(make_message(
        Calling="true", CallerUUID="alice", CalleeUUID="bob",
        StreamAddress="rtsp://alice/live")))
    incoming = json.loads(bob.recv_text())
    show("bob   <-", incoming)

    print("\nbob accepts; the result comes back and both turn Chatting:")
    bob.send_text(json.dumps(make_message(
        Called="true", CallResult="Accepted",
        CallerUUID="alice", CalleeUUID="bob")))
    show("alice <-", json.loads(alice.recv_text()))
    print(f"  cached states: alice={server.cache.get('state:alice')}, "
          f"bob={server.cache.get('state:bob')}")

    alice.close()
    bob.close()
    server.stop()
    print("\ndisconnects append Offline rows to the user_net_info log")
