/**
 * Registration flow controller.
 *
 * Drives the door server session: show the QR for a wallet scan (or
 * simulate the scan with the dev mock issuer), then submit the node's
 * PUBLIC key and hand the certified bundle to the user as a download.
 * The private key never reaches this flow; the user generates keys with
 * the CLI and uploads only public_key.json here.
 */

import { ApiError, DoorClient } from "./api";
import type { SignupEvent, SignupState, Store } from "./state";

export class SignupFlow {
  constructor(
    private door: DoorClient,
    private store: Store<SignupState, SignupEvent>,
  ) {}

  get state(): SignupState {
    return this.store.get();
  }

  async start(): Promise<void> {
    try {
      const session = await this.door.startSession();
      this.store.dispatch({
        type: "SESSION_STARTED",
        token: session.token,
        qrPayload: session.qr_payload,
      });
    } catch (err) {
      this.fail(err);
    }
  }

  /** The "Simulate wallet scan" button: dev mock issuer signs the attribute. */
  async simulateWalletScan(attributeName: string, attributeValue: string): Promise<void> {
    const token = this.store.get().token;
    if (token === null) {
      return;
    }
    try {
      const disclosure = await this.door.mockDisclosure(attributeName, attributeValue);
      const result = await this.door.disclose(token, disclosure);
      if (result === "accepted") {
        this.store.dispatch({ type: "WALLET_ACCEPTED" });
      } else if (result === "duplicate") {
        this.store.dispatch({ type: "WALLET_DUPLICATE" });
      } else {
        this.store.dispatch({
          type: "WALLET_INVALID",
          message: "the issuer rejected the disclosed attribute",
        });
      }
    } catch (err) {
      this.fail(err);
    }
  }

  /**
   * Submit the public key from an uploaded public_key.json and collect
   * the certified bundle.
   */
  async submitPublicKeyFile(fileText: string): Promise<void> {
    const token = this.store.get().token;
    if (token === null) {
      return;
    }
    let publicKeyB64: string;
    try {
      const parsed = JSON.parse(fileText) as { public_key?: string };
      if (typeof parsed.public_key !== "string" || parsed.public_key.length === 0) {
        throw new Error("no public_key field");
      }
      publicKeyB64 = parsed.public_key;
    } catch (err) {
      this.store.dispatch({
        type: "FAILED",
        message: `that is not a public_key.json file (${String(err)})`,
      });
      return;
    }
    try {
      const bundle = await this.door.complete(token, publicKeyB64);
      this.store.dispatch({ type: "KEY_CERTIFIED", bundle });
    } catch (err) {
      this.fail(err);
    }
  }

  reset(): void {
    this.store.dispatch({ type: "RESET" });
  }

  private fail(err: unknown): void {
    const message =
      err instanceof ApiError
        ? err.message
        : `door server unreachable (${String(err)})`;
    this.store.dispatch({ type: "FAILED", message });
  }
}

/** The downloadable bundle file contents (what the node expects on disk). */
export function bundleFileText(state: SignupState): string {
  if (state.bundle === null) {
    throw new Error("no bundle yet");
  }
  return JSON.stringify(state.bundle, Object.keys(state.bundle).sort()) + "\n";
}
