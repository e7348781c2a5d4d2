/**
 * End-to-end console test against a live teleop service.
 *
 * Runs the real Python service as a child process, mounts the real console
 * DOM in the headless document, wires it through a real WebSocket (the `ws`
 * client), and drives it by dispatching DOM events -- connect/status,
 * live F_t and depth readouts, haptic slider endpoint mapping, and the
 * wrench pad's release-emits-zero contract, all observed through the
 * service's own state broadcasts.
 */

import { ChildProcess, spawn } from "node:child_process";
import { mkdtempSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { createServer } from "node:net";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";
import WebSocket from "ws";

import { ReconnectingSocket } from "../src/socket.js";
import { ConsoleViewModel } from "../src/viewmodel.js";
import { mountConsole } from "../src/ui.js";

const SCENARIO = `name: console_live
chain: youbot_approx
q0: [0.0, 0.80, 1.20, 1.14, 0.0]
mode: insert
dt: 0.001
duration: 1.0
seed: 7
tissue: setup1
insertion: {speed: 0.002, depth: 0.010}
`;

let proc: ChildProcess;
let port: number;

function freePort(): Promise<number> {
  return new Promise((resolve, reject) => {
    const srv = createServer();
    srv.listen(0, "127.0.0.1", () => {
      const address = srv.address();
      if (address === null || typeof address === "string") {
        reject(new Error("no port"));
        return;
      }
      const p = address.port;
      srv.close(() => resolve(p));
    });
  });
}

async function waitFor(check: () => boolean, what: string, timeoutMs = 60_000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    if (check()) {
      return;
    }
    await new Promise((r) => setTimeout(r, 25));
  }
  throw new Error(`timed out waiting for ${what}`);
}

beforeAll(async () => {
  port = await freePort();
  const dir = mkdtempSync(join(tmpdir(), "console-live-"));
  const scenarioPath = join(dir, "scenario.yaml");
  writeFileSync(scenarioPath, SCENARIO);
  proc = spawn(
    "python3",
    [
      "-c",
      "from insertarm.cli import serve_main; import sys; " +
        `sys.exit(serve_main(['--scenario', '${scenarioPath}', ` +
        `'--bind', '127.0.0.1:${port}', '--timescale', '0']))`,
    ],
    { stdio: ["ignore", "pipe", "pipe"] },
  );
  // wait until the socket accepts
  await waitForServer();
}, 120_000);

afterAll(() => {
  proc?.kill();
});

async function waitForServer(): Promise<void> {
  const deadline = Date.now() + 90_000;
  while (Date.now() < deadline) {
    const ok = await new Promise<boolean>((resolve) => {
      const ws = new WebSocket(`ws://127.0.0.1:${port}`);
      ws.onopen = () => {
        ws.close();
        resolve(true);
      };
      ws.onerror = () => resolve(false);
    });
    if (ok) {
      return;
    }
    await new Promise((r) => setTimeout(r, 250));
  }
  throw new Error("teleop service did not come up");
}

describe("operator console against a live service", () => {
  it("connects, renders live telemetry, maps slider endpoints, zeroes the wrench on release", async () => {
    const root = document.createElement("div");
    document.body.appendChild(root);

    const sentLines: Record<string, unknown>[] = [];
    let vm!: ConsoleViewModel;
    const socket = new ReconnectingSocket(
      `ws://127.0.0.1:${port}`,
      {
        onLine: (line) => vm.handleLine(line),
        onStateChange: (state) => vm.handleConnectionState(state),
      },
      (url) => new WebSocket(url) as never,
    );
    // snoop every outbound command for the release-emits-zero check
    const rawSend = socket.send.bind(socket);
    socket.send = (line: string) => {
      sentLines.push(JSON.parse(line));
      return rawSend(line);
    };
    vm = new ConsoleViewModel(socket);
    mountConsole(root, vm);

    const roleText = (role: string) =>
      root.querySelector(`[data-role=${JSON.stringify(role)}]`)?.textContent ?? "";

    // before connecting: visibly disconnected, controls disabled
    expect(roleText("status")).toBe("disconnected");
    const slider = root.querySelector('[data-role="haptic-slider"]') as HTMLInputElement;
    expect(slider.disabled).toBe(true);

    socket.connect();
    await waitFor(() => vm.connection === "connected", "connection");
    await waitFor(() => vm.latest !== null, "first state broadcast");
    expect(roleText("status")).toBe("connected");
    expect(slider.disabled).toBe(false);

    // live F_t and depth readouts render from the broadcast stream
    expect(roleText("force")).toMatch(/F_t: -?\d+\.\d+ N/);
    expect(roleText("depth")).toMatch(/depth: \d+\.\d+ mm/);

    // take the driver token through the UI button
    (root.querySelector('[data-role="request-driver"]') as HTMLButtonElement).click();
    await waitFor(() => vm.driverToken !== null, "driver grant");

    // slider endpoint 1 -> x_h = max depth, applied by the service
    slider.value = "1000";
    slider.dispatchEvent(new Event("input"));
    await waitFor(() => vm.latest!.x_h === vm.maxDepth, "x_h at max depth");
    const sentTargets = sentLines.filter((m) => m.type === "haptic_target");
    expect(sentTargets[sentTargets.length - 1].x_h).toBe(0.01);

    // the needle starts advancing and tissue bites: depth > 0, F_t < 0
    await waitFor(() => vm.latest!.depth > 0.0015, "insertion progress");
    await waitFor(() => vm.latest!.F_t < 0, "resisting force");
    expect(roleText("force")).toMatch(/F_t: -\d/);

    // slider endpoint 0 -> x_h = 0 (wait out the 20 ms throttle first)
    await new Promise((r) => setTimeout(r, 30));
    slider.value = "0";
    slider.dispatchEvent(new Event("input"));
    await waitFor(() => vm.latest!.x_h === 0, "x_h back to zero");

    // heartbeat age indicator ticks
    await waitFor(() => vm.heartbeatAgeMs() !== null, "heartbeat", 15_000);
    expect(roleText("heartbeat")).toMatch(/hb: \d+\.\ds ago/);

    // wrench pad only works in admittance mode; switch through the UI
    (root.querySelector('[data-role="mode-admittance"]') as HTMLButtonElement).click();
    await waitFor(() => vm.latest!.mode === "admittance", "admittance mode");

    const y0 = vm.latest!.pose.position[1];
    const padBtn = root.querySelector('[data-role="wrench-+y"]') as HTMLButtonElement;
    padBtn.dispatchEvent(new Event("pointerdown"));
    // hold briefly: the platform must drift along +y under the virtual push
    await waitFor(() => vm.latest!.pose.position[1] > y0 + 0.002, "pose responds to push");
    padBtn.dispatchEvent(new Event("pointerup"));
    padBtn.dispatchEvent(new Event("pointerup")); // double release: still one zero command

    const wrenches = sentLines.filter((m) => m.type === "apply_wrench");
    expect(wrenches.length).toBe(2);
    expect((wrenches[0].wrench as number[])[1]).toBeCloseTo(2.5);
    expect(wrenches[1].wrench).toEqual([0, 0, 0, 0, 0, 0]);
    expect(wrenches[1].duration).toBe(0);

    // the command history reflects acknowledged commands
    await waitFor(
      () => vm.commandHistory.filter((h) => h.type === "apply_wrench" && h.status === "sent").length >= 2,
      "wrench acks",
    );

    socket.disconnect();
    expect(roleText("status")).toBe("disconnected");
  }, 180_000);
});
