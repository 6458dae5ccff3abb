// The pointer stands in for a gaze signal. Coordinates are mapped from
// CSS pixels into the fixed layout space the server animates in, so the
// canvas can be scaled to fit the window without distorting motion. Any
// residual constant offset is harmless: the detection metrics ignore
// absolute position and respond to motion only.

export type LayoutSpace = { width: number; height: number };

export type Rect = { left: number; top: number; width: number; height: number };

export function toLayoutCoords(
  clientX: number,
  clientY: number,
  rect: Rect,
  space: LayoutSpace,
): { x: number; y: number } {
  return {
    x: (clientX - rect.left) * (space.width / rect.width),
    y: (clientY - rect.top) * (space.height / rect.height),
  };
}

export type PointerState = { x: number; y: number; seen: boolean };

export function trackPointer(canvas: HTMLCanvasElement, space: LayoutSpace): PointerState {
  const state: PointerState = { x: space.width / 2, y: space.height / 2, seen: false };
  canvas.addEventListener(
    "pointermove",
    (event) => {
      const rect = canvas.getBoundingClientRect();
      if (rect.width <= 0 || rect.height <= 0) return;
      const mapped = toLayoutCoords(event.clientX, event.clientY, rect, space);
      state.x = mapped.x;
      state.y = mapped.y;
      state.seen = true;
    },
    { passive: true },
  );
  return state;
}
