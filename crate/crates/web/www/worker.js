// Runs the interpreter off the main thread. A trap (stack exhaustion) leaves the wasm
// instance unusable, so the page replaces the worker when one is reported.
import init, { evaluate, gradient_curve, transform } from "./pkg/vlad_web.js";

const ready = init();
const ops = { evaluate, gradient_curve, transform };

onmessage = async ({ data: { id, op, args } }) => {
  await ready;
  try {
    postMessage({ id, ok: true, value: ops[op](...args) });
  } catch (e) {
    const fatal = e instanceof WebAssembly.RuntimeError || e instanceof RangeError;
    postMessage({ id, ok: false, error: String(e), fatal });
  }
};
