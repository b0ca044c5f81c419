/**
 * Central state: a registration state machine and a market store.
 *
 * Every rendered screen derives from this state, and every update goes
 * through `dispatch`, which applies pure reducers one at a time (queued
 * if a reducer dispatches), so concurrent fetch completions can never
 * interleave half-applied updates.
 */

import type { ChatMessage, KeyBundle, ListingRow, NodeStatus } from "./types";

// -- registration state machine --------------------------------------------

export type RegistrationState =
  | "idle"
  | "qr-shown"
  | "verified"
  | "completed"
  | "duplicate"
  | "error";

export type SignupEvent =
  | { type: "SESSION_STARTED"; token: string; qrPayload: string }
  | { type: "WALLET_ACCEPTED" }
  | { type: "WALLET_DUPLICATE" }
  | { type: "WALLET_INVALID"; message: string }
  | { type: "KEY_CERTIFIED"; bundle: KeyBundle }
  | { type: "FAILED"; message: string }
  | { type: "RESET" };

/**
 * Allowed transitions. Anything not listed here is rejected, which the
 * model test leans on: no rendered state is reachable except through
 * this table.
 */
const SIGNUP_TRANSITIONS: Record<RegistrationState, Partial<Record<SignupEvent["type"], RegistrationState>>> = {
  idle: { SESSION_STARTED: "qr-shown", FAILED: "error" },
  "qr-shown": {
    WALLET_ACCEPTED: "verified",
    WALLET_DUPLICATE: "duplicate",
    WALLET_INVALID: "error",
    FAILED: "error",
    RESET: "idle",
  },
  verified: { KEY_CERTIFIED: "completed", FAILED: "error", RESET: "idle" },
  completed: { RESET: "idle" },
  duplicate: { RESET: "idle" },
  error: { RESET: "idle" },
};

export function signupTransition(
  state: RegistrationState,
  event: SignupEvent["type"],
): RegistrationState | null {
  return SIGNUP_TRANSITIONS[state][event] ?? null;
}

export interface SignupState {
  registrationState: RegistrationState;
  token: string | null;
  qrPayload: string | null;
  bundle: KeyBundle | null;
  errorMessage: string | null;
}

export const initialSignupState: SignupState = {
  registrationState: "idle",
  token: null,
  qrPayload: null,
  bundle: null,
  errorMessage: null,
};

export function signupReducer(state: SignupState, event: SignupEvent): SignupState {
  const next = signupTransition(state.registrationState, event.type);
  if (next === null) {
    // Stale fetch completions after a reset must not corrupt the screen.
    return state;
  }
  switch (event.type) {
    case "SESSION_STARTED":
      return {
        ...initialSignupState,
        registrationState: next,
        token: event.token,
        qrPayload: event.qrPayload,
      };
    case "KEY_CERTIFIED":
      return { ...state, registrationState: next, bundle: event.bundle };
    case "WALLET_INVALID":
    case "FAILED":
      return { ...state, registrationState: next, errorMessage: event.message };
    case "RESET":
      return initialSignupState;
    default:
      return { ...state, registrationState: next };
  }
}

// -- market store ------------------------------------------------------------

export interface MarketState {
  listings: ListingRow[];
  status: NodeStatus | null;
  online: boolean;
  /** Current poll interval: 1 s online, 5 s after a failure. */
  pollIntervalMs: number;
  lastError: string | null;
  chatHistories: Record<string, ChatMessage[]>;
}

export const initialMarketState: MarketState = {
  listings: [],
  status: null,
  online: true,
  pollIntervalMs: 1000,
  lastError: null,
  chatHistories: {},
};

export const POLL_INTERVAL_MS = 1000;
export const OFFLINE_POLL_INTERVAL_MS = 5000;

export type MarketEvent =
  | { type: "LISTINGS"; listings: ListingRow[] }
  | { type: "STATUS"; status: NodeStatus }
  | { type: "NODE_OFFLINE"; message: string }
  | { type: "CHAT_HISTORY"; channelId: string; messages: ChatMessage[] }
  | { type: "LISTING_REMOVED"; contentId: string };

export function marketReducer(state: MarketState, event: MarketEvent): MarketState {
  switch (event.type) {
    case "LISTINGS":
      return {
        ...state,
        listings: event.listings,
        online: true,
        pollIntervalMs: POLL_INTERVAL_MS,
        lastError: null,
      };
    case "STATUS":
      return { ...state, status: event.status };
    case "NODE_OFFLINE":
      return {
        ...state,
        online: false,
        pollIntervalMs: OFFLINE_POLL_INTERVAL_MS,
        lastError: event.message,
      };
    case "CHAT_HISTORY":
      return {
        ...state,
        chatHistories: { ...state.chatHistories, [event.channelId]: event.messages },
      };
    case "LISTING_REMOVED":
      // Optimistic: drop the row now; the next poll confirms.
      return {
        ...state,
        listings: state.listings.filter((row) => row.content_id !== event.contentId),
      };
  }
}

// -- store plumbing -----------------------------------------------------------

export type Listener<S> = (state: S) => void;

export class Store<S, E> {
  private listeners = new Set<Listener<S>>();
  private queue: E[] = [];
  private reducing = false;

  constructor(
    private state: S,
    private reducer: (state: S, event: E) => S,
  ) {}

  get(): S {
    return this.state;
  }

  subscribe(listener: Listener<S>): () => void {
    this.listeners.add(listener);
    return () => this.listeners.delete(listener);
  }

  dispatch(event: E): void {
    this.queue.push(event);
    if (this.reducing) {
      return; // the running loop will drain it in order
    }
    this.reducing = true;
    try {
      while (this.queue.length > 0) {
        const next = this.queue.shift() as E;
        this.state = this.reducer(this.state, next);
        for (const listener of this.listeners) {
          listener(this.state);
        }
      }
    } finally {
      this.reducing = false;
    }
  }
}

export function createSignupStore(): Store<SignupState, SignupEvent> {
  return new Store(initialSignupState, signupReducer);
}

export function createMarketStore(): Store<MarketState, MarketEvent> {
  return new Store(initialMarketState, marketReducer);
}
