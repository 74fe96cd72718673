/**
 * Line-delimited JSON client for the environment server.
 *
 * The server answers strictly in request order, so a FIFO of pending
 * promises is enough. Two transports: a spawned child process speaking
 * stdio, or a TCP connection to an already-running server.
 */
import { spawn, ChildProcess } from "node:child_process";
import net from "node:net";

type Pending = { resolve: (value: any) => void; reject: (err: Error) => void };

export interface Transport {
  writeLine(line: string): void;
  onLine(cb: (line: string) => void): void;
  onClose(cb: (err?: Error) => void): void;
  close(): void;
}

class LineSplitter {
  private buffer = "";

  constructor(private readonly emit: (line: string) => void) {}

  push(chunk: string): void {
    this.buffer += chunk;
    let idx: number;
    while ((idx = this.buffer.indexOf("\n")) >= 0) {
      const line = this.buffer.slice(0, idx).trim();
      this.buffer = this.buffer.slice(idx + 1);
      if (line) this.emit(line);
    }
  }
}

export class StdioTransport implements Transport {
  private child: ChildProcess;
  private lineCb: (line: string) => void = () => {};
  private closeCb: (err?: Error) => void = () => {};

  constructor(command: string[], cwd?: string) {
    this.child = spawn(command[0], command.slice(1), { cwd, stdio: ["pipe", "pipe", "inherit"] });
    const splitter = new LineSplitter((line) => this.lineCb(line));
    this.child.stdout!.setEncoding("utf-8");
    this.child.stdout!.on("data", (chunk: string) => splitter.push(chunk));
    this.child.on("exit", () => this.closeCb());
    this.child.on("error", (err) => this.closeCb(err));
  }

  writeLine(line: string): void {
    this.child.stdin!.write(line + "\n");
  }

  onLine(cb: (line: string) => void): void {
    this.lineCb = cb;
  }

  onClose(cb: (err?: Error) => void): void {
    this.closeCb = cb;
  }

  close(): void {
    this.child.stdin!.end();
    this.child.kill();
  }
}

export class TcpTransport implements Transport {
  private socket: net.Socket;
  private lineCb: (line: string) => void = () => {};
  private closeCb: (err?: Error) => void = () => {};

  constructor(host: string, port: number) {
    this.socket = net.createConnection({ host, port });
    this.socket.setEncoding("utf-8");
    const splitter = new LineSplitter((line) => this.lineCb(line));
    this.socket.on("data", (chunk: string) => splitter.push(chunk));
    this.socket.on("close", () => this.closeCb());
    this.socket.on("error", (err) => this.closeCb(err));
  }

  writeLine(line: string): void {
    this.socket.write(line + "\n");
  }

  onLine(cb: (line: string) => void): void {
    this.lineCb = cb;
  }

  onClose(cb: (err?: Error) => void): void {
    this.closeCb = cb;
  }

  close(): void {
    this.socket.end();
  }
}

export class ProtocolError extends Error {}

export class Client {
  private pending: Pending[] = [];
  private closed = false;

  constructor(private readonly transport: Transport) {
    transport.onLine((line) => {
      const next = this.pending.shift();
      if (!next) return; // unsolicited line; server never does this
      try {
        next.resolve(JSON.parse(line));
      } catch (err) {
        next.reject(err as Error);
      }
    });
    transport.onClose((err) => {
      this.closed = true;
      const failure = err ?? new ProtocolError("connection closed");
      for (const p of this.pending.splice(0)) p.reject(failure);
    });
  }

  /** Send one request and await its (order-matched) response. */
  request(payload: Record<string, unknown>): Promise<any> {
    if (this.closed) return Promise.reject(new ProtocolError("client is closed"));
    return new Promise((resolve, reject) => {
      this.pending.push({ resolve, reject });
      this.transport.writeLine(JSON.stringify(payload));
    });
  }

  /** Send a request and fail loudly on an error response. */
  async call(payload: Record<string, unknown>): Promise<any> {
    const response = await this.request(payload);
    if (response && typeof response === "object" && response.error) {
      throw new ProtocolError(String(response.error));
    }
    return response;
  }

  async shutdown(): Promise<void> {
    try {
      await this.request({ cmd: "shutdown" });
    } finally {
      this.transport.close();
    }
  }

  close(): void {
    this.closed = true;
    this.transport.close();
  }
}

/**
 * "stdio" (spawn `qpart serve`), "stdio:<command...>" for a custom server
 * command, or "host:port" for TCP.
 */
export function connect(address: string): Client {
  if (address === "stdio") {
    return new Client(new StdioTransport(["qpart", "serve", "--transport", "stdio"]));
  }
  if (address.startsWith("stdio:")) {
    const command = address.slice("stdio:".length).split(" ").filter(Boolean);
    return new Client(new StdioTransport(command));
  }
  const sep = address.lastIndexOf(":");
  if (sep < 0) throw new ProtocolError(`bad server address ${address}`);
  return new Client(new TcpTransport(address.slice(0, sep), Number(address.slice(sep + 1))));
}
