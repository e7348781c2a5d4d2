import { describe, expect, it } from "vitest";

import { StateMessage } from "../src/protocol.js";
import { ConsoleViewModel } from "../src/viewmodel.js";

class FakeTransport {
  sent: Record<string, unknown>[] = [];
  open = true;

  send(line: string): boolean {
    if (!this.open) {
      return false;
    }
    this.sent.push(JSON.parse(line));
    return true;
  }

  byType(type: string): Record<string, unknown>[] {
    return this.sent.filter((m) => m.type === type);
  }
}

function makeVM(opts: { now?: () => number } = {}) {
  const transport = new FakeTransport();
  const vm = new ConsoleViewModel(transport, { throttleMs: 20, now: opts.now });
  return { vm, transport };
}

function welcome(vm: ConsoleViewModel, maxDepth = 0.01, mode = "insert") {
  vm.handleConnectionState("connected");
  vm.handleLine(
    JSON.stringify({
      v: "v1", type: "welcome", protocol: "v1", scenario: "test", mode,
      dt: 0.001, max_depth: maxDepth, state_period: 0.02,
    }),
  );
}

function stateLine(overrides: Partial<StateMessage> = {}): string {
  return JSON.stringify({
    v: "v1", type: "state", seq: 1, t: 0.02, mode: "insert", paused: false,
    pose: { position: [0.1, 0, 0.2], rotation: [0, 0, 0] },
    task_err: [0, 0, 0, 0, 0, 0], depth: 0, theta: 0, tool_v: 0, F_t: 0,
    x_h: 0, punctured: [false], saturation: { v: false, w: false, stalled: false },
    last_command: null,
    ...overrides,
  });
}

function grantDriver(vm: ConsoleViewModel, transport: FakeTransport) {
  vm.requestDriver();
  expect(transport.byType("request_driver").length).toBe(1);
  vm.handleLine(JSON.stringify({ v: "v1", type: "driver_grant", token: "tok" }));
}

describe("haptic slider", () => {
  it("maps the endpoints exactly onto 0 and max_depth", () => {
    let t = 0;
    const { vm, transport } = makeVM({ now: () => t });
    welcome(vm, 0.01);
    grantDriver(vm, transport);
    vm.hapticSliderInput(0);
    t += 100;
    vm.hapticSliderInput(1);
    t += 100;
    vm.hapticSliderInput(2); // clamped
    const sent = transport.byType("haptic_target");
    expect(sent.map((m) => m.x_h)).toEqual([0, 0.01, 0.01]);
    expect(sent.every((m) => m.token === "tok")).toBe(true);
  });

  it("throttles to at most one command per 20 ms with monotone timestamps", () => {
    let t = 0;
    const { vm, transport } = makeVM({ now: () => t });
    welcome(vm);
    grantDriver(vm, transport);
    const stamps: number[] = [];
    for (let i = 0; i <= 200; i++) {
      t = i * 5; // 200 Hz of slider motion over 1 s
      if (vm.hapticSliderInput(i / 200)) {
        stamps.push(t);
      }
    }
    expect(stamps.length).toBeLessThanOrEqual(51); // <= 50 commands/s (+1 fencepost)
    for (let i = 1; i < stamps.length; i++) {
      expect(stamps[i]).toBeGreaterThan(stamps[i - 1]);
      expect(stamps[i] - stamps[i - 1]).toBeGreaterThanOrEqual(20);
    }
  });

  it("is suppressed with a notice outside insert mode", () => {
    const { vm, transport } = makeVM();
    welcome(vm, 0.01, "insert");
    grantDriver(vm, transport);
    vm.handleLine(stateLine({ mode: "admittance" }));
    expect(vm.hapticSliderInput(0.5)).toBe(false);
    expect(transport.byType("haptic_target").length).toBe(0);
    expect(vm.notice).toMatch(/not allowed in admittance/);
  });
});

describe("wrench pad", () => {
  it("press emits the wrench, release emits the zero wrench exactly once", () => {
    const { vm, transport } = makeVM();
    welcome(vm, 0.01, "admittance");
    grantDriver(vm, transport);
    vm.handleLine(stateLine({ mode: "admittance" }));
    vm.wrenchPadPress(1, 2.5);
    vm.wrenchPadRelease();
    vm.wrenchPadRelease(); // double release: no second zero command
    const sent = transport.byType("apply_wrench");
    expect(sent.length).toBe(2);
    expect(sent[0].wrench).toEqual([0, 2.5, 0, 0, 0, 0]);
    expect(sent[1].wrench).toEqual([0, 0, 0, 0, 0, 0]);
    expect(sent[1].duration).toBe(0);
  });

  it("is suppressed outside admittance mode", () => {
    const { vm, transport } = makeVM();
    welcome(vm, 0.01, "insert");
    grantDriver(vm, transport);
    vm.handleLine(stateLine({ mode: "insert" }));
    expect(vm.wrenchPadPress(0, 1.0)).toBe(false);
    expect(transport.byType("apply_wrench").length).toBe(0);
  });
});

describe("driver handshake", () => {
  it("requests the driver token on the first command attempt", () => {
    const { vm, transport } = makeVM();
    welcome(vm);
    vm.handleLine(stateLine());
    expect(vm.hapticSliderInput(0.3)).toBe(false); // suppressed, token pending
    expect(transport.byType("request_driver").length).toBe(1);
    expect(transport.byType("haptic_target").length).toBe(0);
    vm.handleLine(JSON.stringify({ v: "v1", type: "driver_grant", token: "abc" }));
    expect(vm.driverToken).toBe("abc");
    expect(vm.hapticSliderInput(0.3)).toBe(true);
  });

  it("forgets the token when the connection drops", () => {
    const { vm, transport } = makeVM();
    welcome(vm);
    grantDriver(vm, transport);
    vm.handleConnectionState("reconnecting");
    expect(vm.driverToken).toBeNull();
  });
});

describe("state handling", () => {
  it("shows exactly the latest F_t unless smoothing is toggled", () => {
    const { vm } = makeVM();
    welcome(vm);
    vm.handleLine(stateLine({ F_t: -1.25, t: 0.02 }));
    vm.handleLine(stateLine({ F_t: -2.5, t: 0.04, seq: 2 }));
    expect(vm.displayedForce()).toBe(-2.5);
    vm.toggleSmoothing();
    vm.handleLine(stateLine({ F_t: -5.0, t: 0.06, seq: 3 }));
    expect(vm.displayedForce()).not.toBe(-5.0); // EMA lags, and the UI labels it
    vm.toggleSmoothing();
    expect(vm.displayedForce()).toBe(-5.0);
  });

  it("marks a gap in the plots after a reconnect", () => {
    const { vm } = makeVM();
    welcome(vm);
    vm.handleLine(stateLine({ t: 0.02 }));
    vm.handleConnectionState("reconnecting");
    vm.handleConnectionState("connected");
    vm.handleLine(stateLine({ t: 5.0, seq: 99 }));
    const samples = vm.forcePlot.toArray();
    expect(samples[samples.length - 1].gap).toBe(true);
  });

  it("marks a gap when the service flags dropped broadcasts", () => {
    const { vm } = makeVM();
    welcome(vm);
    vm.handleLine(stateLine({ t: 0.02 }));
    vm.handleLine(stateLine({ t: 0.5, seq: 30, gap: true }));
    const samples = vm.depthPlot.toArray();
    expect(samples[samples.length - 1].gap).toBe(true);
  });

  it("keeps plot buffers time-ordered across a server reset", () => {
    const { vm } = makeVM();
    welcome(vm);
    vm.handleLine(stateLine({ t: 3.0 }));
    vm.handleLine(stateLine({ t: 0.02, seq: 2 })); // reset restarts sim time
    const ts = vm.forcePlot.toArray().map((s) => s.t);
    expect(ts).toEqual([...ts].sort((a, b) => a - b));
  });

  it("caps the command history", () => {
    const { vm, transport } = makeVM();
    welcome(vm);
    grantDriver(vm, transport);
    for (let i = 0; i < 300; i++) {
      vm.handleLine(JSON.stringify({ v: "v1", type: "ack", applied: "jog", t: i * 0.001 }));
    }
    expect(vm.commandHistory.length).toBeLessThanOrEqual(100);
  });

  it("tracks heartbeat age", () => {
    let t = 1000;
    const { vm } = makeVM({ now: () => t });
    welcome(vm);
    expect(vm.heartbeatAgeMs()).toBeNull();
    vm.handleLine(JSON.stringify({ v: "v1", type: "heartbeat", t: 0.5, wall: 0 }));
    t = 1400;
    expect(vm.heartbeatAgeMs()).toBe(400);
  });

  it("disables controls while disconnected", () => {
    const { vm, transport } = makeVM();
    expect(vm.controlsEnabled).toBe(false);
    expect(vm.pause()).toBe(false);
    expect(transport.sent.length).toBe(0);
  });
});
