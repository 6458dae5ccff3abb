import { ClientMessage, ServerMessage, parseServerMessage } from "./protocol.js";

// A Wire is the session's only view of the network: JSON objects out,
// parsed server messages in. Keeping it this small lets tests swap in a
// node WebSocket (or no socket at all) without touching session logic.

export type WireHandlers = {
  onMessage(msg: ServerMessage): void;
  onOpen(): void;
  onClose(): void;
};

export interface Wire {
  send(msg: ClientMessage): void;
  close(): void;
}

export function encodeClientMessage(msg: ClientMessage): string {
  return JSON.stringify(msg);
}

export function openWebSocketWire(url: string, handlers: WireHandlers): Wire {
  const socket = new WebSocket(url);
  socket.onopen = () => handlers.onOpen();
  socket.onclose = () => handlers.onClose();
  socket.onerror = () => {
    // the close event follows; nothing useful to report here
  };
  socket.onmessage = (event) => {
    const msg = parseServerMessage(String(event.data));
    if (msg) handlers.onMessage(msg);
  };
  return {
    send(msg: ClientMessage): void {
      if (socket.readyState === WebSocket.OPEN) {
        socket.send(encodeClientMessage(msg));
      }
    },
    close(): void {
      socket.onclose = null;
      socket.close();
    },
  };
}

// ws:// URL for the page's own origin, e.g. http://host:port -> ws://host:port/ws
export function defaultWireUrl(location: { protocol: string; host: string }): string {
  const scheme = location.protocol === "https:" ? "wss:" : "ws:";
  return `${scheme}//${location.host}/ws`;
}
