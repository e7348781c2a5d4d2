/**
 * Entry point: connect to the teleop service and mount the console.
 * The service URL comes from the `ws` query parameter, defaulting to
 * ws://<host>:8765.
 */

import { ReconnectingSocket } from "./socket.js";
import { ConsoleViewModel } from "./viewmodel.js";
import { mountConsole } from "./ui.js";

function serviceUrl(): string {
  const params = new URLSearchParams(window.location.search);
  const fromQuery = params.get("ws");
  if (fromQuery) {
    return fromQuery;
  }
  const host = window.location.hostname || "127.0.0.1";
  return `ws://${host}:8765`;
}

const root = document.getElementById("console");
if (root === null) {
  throw new Error("missing #console element");
}

let vm: ConsoleViewModel;
const socket = new ReconnectingSocket(
  serviceUrl(),
  {
    onLine: (line) => vm.handleLine(line),
    onStateChange: (state) => vm.handleConnectionState(state),
  },
  (url) => new WebSocket(url),
);
vm = new ConsoleViewModel(socket);
const ui = mountConsole(root, vm);
socket.connect();

// heartbeat age ticks even when no messages arrive
setInterval(() => ui.render(), 500);
