import { SocketLike } from "./client.js";
import { StrokeSampler, WorkPlane } from "./draw.js";
import { parseArmDescription } from "./kinematics.js";
import { SceneView } from "./scene3d.js";
import { Studio } from "./studio.js";
import { CLIENT_MESSAGE_TYPES, ClientMessageType } from "./protocol.js";

/** Browser WebSocket behind the narrow surface the client needs. */
function browserSocket(url: string): Promise<SocketLike> {
  return new Promise((resolve, reject) => {
    const ws = new WebSocket(url);
    const wrapped: SocketLike = {
      send: (data) => ws.send(data),
      close: () => ws.close(),
      set onmessage(handler: (data: string) => void) {
        ws.onmessage = (event) => handler(String(event.data));
      },
      set onclose(handler: () => void) {
        ws.onclose = () => handler();
      },
    };
    ws.onopen = () => resolve(wrapped);
    ws.onerror = () => reject(new Error(`cannot connect to ${url}`));
  });
}

const WORK_PLANE: WorkPlane = {
  center: [-0.6, -0.2, 0.4],
  halfX: 0.3,
  halfY: 0.3,
  depthRange: 0.2,
};

function requireElement<T extends HTMLElement>(id: string): T {
  const el = document.getElementById(id);
  if (el === null) {
    throw new Error(`missing element #${id}`);
  }
  return el as T;
}

async function boot(): Promise<void> {
  const params = new URLSearchParams(window.location.search);
  const server = params.get("server") ?? "ws://127.0.0.1:7701";
  const robot = params.get("robot") ?? "127.0.0.1:7801";

  const armDoc = await (await fetch("./ur10_arm.json")).json();
  const arm = parseArmDescription(armDoc);

  const studio = new Studio(await browserSocket(server));
  const view = studio.view;
  const scene = new SceneView(arm);
  scene.attach(requireElement<HTMLCanvasElement>("view"));

  const banner = requireElement<HTMLDivElement>("banner");
  const modeLabel = requireElement<HTMLSpanElement>("mode");
  const listEl = requireElement<HTMLUListElement>("training-list");
  const slider = requireElement<HTMLInputElement>("cursor");
  const depth = requireElement<HTMLInputElement>("depth");

  const buttons = new Map<ClientMessageType, HTMLButtonElement>();
  for (const type of CLIENT_MESSAGE_TYPES) {
    const el = document.getElementById(`btn-${type}`);
    if (el !== null) {
      buttons.set(type, el as HTMLButtonElement);
    }
  }

  function refresh(): void {
    modeLabel.textContent = view.connected ? view.mode : "disconnected";
    banner.hidden = view.banner === null;
    banner.textContent = view.banner?.text ?? "";
    for (const [type, el] of buttons) {
      el.disabled = !view.isEnabled(type);
    }
    slider.max = String(Math.max(0, view.storedCount - 1));
    if (view.cursorIndex !== null) {
      slider.value = String(view.cursorIndex);
    }
    listEl.replaceChildren(
      ...view.trainingSet.map((entry) => {
        const item = document.createElement("li");
        item.textContent = entry.id;
        const del = document.createElement("button");
        del.textContent = "delete";
        del.onclick = () =>
          studio.deleteTrajectory(entry.id).then(refresh, refresh);
        item.appendChild(del);
        return item;
      }),
    );
    scene.update(view);
    scene.render();
  }

  studio.client.onEnvelope(() => refresh());
  studio.client.onClose(() => refresh());
  banner.onclick = () => {
    view.dismissBanner();
    refresh();
  };

  // pointer drawing on the canvas while recording
  const canvas = requireElement<HTMLCanvasElement>("view");
  let sampler: StrokeSampler | null = null;
  let strokeStart = 0;
  canvas.onpointerdown = (event) => {
    if (view.mode !== "Recording") {
      return;
    }
    sampler = new StrokeSampler(WORK_PLANE);
    strokeStart = event.timeStamp;
  };
  canvas.onpointermove = (event) => {
    if (sampler === null) {
      return;
    }
    const rect = canvas.getBoundingClientRect();
    const sample = sampler.pointerMove({
      u: ((event.clientX - rect.left) / rect.width) * 2 - 1,
      v: 1 - ((event.clientY - rect.top) / rect.height) * 2,
      depth: Number(depth.value),
      timeMs: event.timeStamp - strokeStart,
    });
    if (sample !== null) {
      studio.sendPoseSample(sample);
    }
  };
  canvas.onpointerup = () => {
    sampler?.release();
    sampler = null;
  };

  const wire = (type: ClientMessageType, action: () => Promise<unknown>) => {
    const el = buttons.get(type);
    if (el !== undefined) {
      el.onclick = () => action().then(refresh, refresh);
    }
  };
  wire("StartRecording", () => studio.startRecording());
  wire("StopRecording", () => studio.stopRecording());
  wire("Play", () => studio.play());
  wire("Pause", () => studio.pause());
  wire("RedrawFrom", () =>
    studio.redrawFrom(Number(slider.value), []),
  );
  wire("Save", () => studio.save());
  wire("Discard", () => studio.discard());
  wire("AddToTrainingSet", () => studio.addToTrainingSet());
  wire("ListTrainingSet", () => studio.refreshTrainingSet());
  wire("TrainModel", () => studio.train());
  wire("PlaceMarker", () => {
    const pos = view.cursorPosition ?? WORK_PLANE.center;
    return studio.placeMarker([...pos], Number(slider.value) * 0.2);
  });
  wire("ConditionAndSample", () => studio.conditionAndSample());
  wire("Execute", () => studio.execute(robot));
  slider.oninput = () => {
    if (view.mode === "Reviewing") {
      studio.scrubTo(Number(slider.value)).then(refresh, refresh);
    }
  };

  await studio.refreshTrainingSet();
  refresh();
}

boot().catch((err) => {
  const banner = document.getElementById("banner");
  if (banner !== null) {
    banner.hidden = false;
    banner.textContent = String(err);
  }
});
