// Transport-agnostic controller: takes raw frames in, produces frames to
// send and fresh panel HTML.  The browser app gives it a real WebSocket;
// the end-to-end test gives it a node socket.
import { ClientMessage, parseServerMessage } from "./protocol.js";
import { render, RenderedPanels } from "./render.js";
import {
  applyServer,
  applyUserInput,
  ConnectionStatus,
  initialState,
  setConnection,
  ViewState,
} from "./state.js";

export interface InspectorOptions {
  modelId?: string;
  seed?: number;
  send: (frame: string) => void;
}

export class Inspector {
  readonly state: ViewState = initialState();

  constructor(private readonly options: InspectorOptions) {}

  private send(message: ClientMessage): void {
    this.options.send(JSON.stringify(message));
  }

  /** Call when the transport opens: marks it live and opens a session. */
  onOpen(): void {
    setConnection(this.state, "open");
    this.send({
      type: "create_session",
      ...(this.options.modelId !== undefined ? { model_id: this.options.modelId } : {}),
      ...(this.options.seed !== undefined ? { seed: this.options.seed } : {}),
    });
  }

  onConnectionChange(status: ConnectionStatus): void {
    setConnection(this.state, status);
  }

  /** Feed one raw server frame through the schema and the reducer. */
  onFrame(raw: string): void {
    applyServer(this.state, parseServerMessage(raw));
  }

  /** The user pressed enter: record locally and send upstream. */
  userSays(text: string): void {
    if (!this.state.sessionId) {
      this.state.banner = "no session yet";
      return;
    }
    applyUserInput(this.state, text);
    this.send({ type: "user_utterance", session: this.state.sessionId, text });
  }

  requestSnapshot(): void {
    if (this.state.sessionId) {
      this.send({ type: "get_snapshot", session: this.state.sessionId });
    }
  }

  panels(): RenderedPanels {
    return render(this.state);
  }
}
