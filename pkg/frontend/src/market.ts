/**
 * Market controller: the 1-second listing poll (5 s backoff while the
 * node is offline), plus form validation and the bid/chat actions.
 *
 * Validation mirrors the node's own bounds so bad input never leaves
 * the browser; the node still enforces everything server-side.
 */

import { ApiError, NodeClient } from "./api";
import type { MarketEvent, MarketState, Store } from "./state";

export const TITLE_MAX = 140;
export const DESCRIPTION_MAX = 4096;
export const CHAT_MAX = 4096;

export interface ListingForm {
  title: string;
  description: string;
  priceText: string;
  currency: string;
  ttlDays: number;
}

export type FieldErrors = Partial<Record<"title" | "description" | "price" | "currency", string>>;

export function validateListingForm(form: ListingForm): FieldErrors {
  const errors: FieldErrors = {};
  if (form.title.length === 0) {
    errors.title = "title is required";
  } else if (form.title.length > TITLE_MAX) {
    errors.title = `at most ${TITLE_MAX} characters`;
  }
  if (form.description.length > DESCRIPTION_MAX) {
    errors.description = `at most ${DESCRIPTION_MAX} characters`;
  }
  const price = Number(form.priceText);
  if (
    form.priceText.trim() === "" ||
    !Number.isInteger(price) ||
    price < 0
  ) {
    errors.price = "price must be a non-negative integer of minor units";
  }
  if (!/^[A-Z]{3}$/.test(form.currency)) {
    errors.currency = "use a 3-letter ISO-4217 code like EUR";
  }
  return errors;
}

export function validateBidAmount(amountText: string): string | null {
  const amount = Number(amountText);
  if (amountText.trim() === "" || !Number.isInteger(amount) || amount < 0) {
    return "bid must be a non-negative integer of minor units";
  }
  return null;
}

export class MarketController {
  private timer: ReturnType<typeof setTimeout> | null = null;
  private inFlight = false;
  private stopped = true;

  constructor(
    public node: NodeClient,
    private store: Store<MarketState, MarketEvent>,
    private now: () => number = Date.now,
  ) {}

  get state(): MarketState {
    return this.store.get();
  }

  start(): void {
    this.stopped = false;
    void this.tick();
  }

  stop(): void {
    this.stopped = true;
    if (this.timer !== null) {
      clearTimeout(this.timer);
      this.timer = null;
    }
  }

  /** One poll; skipped when the previous one is still running. */
  async tick(): Promise<void> {
    if (this.inFlight) {
      return;
    }
    this.inFlight = true;
    try {
      const [listings, status] = await Promise.all([
        this.node.listings(),
        this.node.status(),
      ]);
      this.store.dispatch({ type: "LISTINGS", listings });
      this.store.dispatch({ type: "STATUS", status });
    } catch (err) {
      this.store.dispatch({
        type: "NODE_OFFLINE",
        message: err instanceof ApiError ? err.message : String(err),
      });
    } finally {
      this.inFlight = false;
      this.schedule();
    }
  }

  private schedule(): void {
    if (this.stopped) {
      return;
    }
    if (this.timer !== null) {
      clearTimeout(this.timer);
    }
    this.timer = setTimeout(() => void this.tick(), this.store.get().pollIntervalMs);
  }

  async createListing(form: ListingForm): Promise<FieldErrors> {
    const errors = validateListingForm(form);
    if (Object.keys(errors).length > 0) {
      return errors; // no request leaves the browser
    }
    try {
      await this.node.createListing({
        title: form.title,
        description: form.description,
        price_amount: Number(form.priceText),
        currency: form.currency,
        ttl_s: Math.round(form.ttlDays * 24 * 3600),
      });
      await this.tick();
      return {};
    } catch (err) {
      return { title: err instanceof ApiError ? err.message : String(err) };
    }
  }

  async removeListing(contentId: string): Promise<string | null> {
    try {
      await this.node.removeListing(contentId);
      this.store.dispatch({ type: "LISTING_REMOVED", contentId });
      return null;
    } catch (err) {
      return err instanceof ApiError ? err.message : String(err);
    }
  }

  async sendBid(
    contentId: string,
    amountText: string,
    currency: string,
    ownerFingerprint: string,
  ): Promise<string | null> {
    const invalid = validateBidAmount(amountText);
    if (invalid !== null) {
      return invalid;
    }
    try {
      await this.node.sendBid({
        content_id: contentId,
        amount: Number(amountText),
        currency,
        target_peer: ownerFingerprint,
      });
      return null;
    } catch (err) {
      return err instanceof ApiError ? err.message : String(err);
    }
  }

  async refreshChat(channelId: string): Promise<void> {
    try {
      const messages = await this.node.chatHistory(channelId);
      this.store.dispatch({ type: "CHAT_HISTORY", channelId, messages });
    } catch (err) {
      if (err instanceof ApiError && err.status === 404) {
        this.store.dispatch({ type: "CHAT_HISTORY", channelId, messages: [] });
        return;
      }
      this.store.dispatch({ type: "NODE_OFFLINE", message: String(err) });
    }
  }

  async sendChat(channelId: string, body: string): Promise<string | null> {
    if (body.length === 0 || body.length > CHAT_MAX) {
      return `message must be 1..${CHAT_MAX} characters`;
    }
    try {
      await this.node.sendChat(channelId, body);
      await this.refreshChat(channelId);
      return null;
    } catch (err) {
      return err instanceof ApiError ? err.message : String(err);
    }
  }
}
