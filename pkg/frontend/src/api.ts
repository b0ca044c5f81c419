/**
 * Thin fetch clients for the door server and the local node API.
 *
 * The UI only ever sends: session management, attribute disclosures,
 * the user's PUBLIC key, listings, bids, and chat bodies. Private key
 * material has no code path into these clients.
 */

import type {
  AttributeDisclosure,
  ChatChannel,
  ChatMessage,
  DisclosureResult,
  KeyBundle,
  ListingRow,
  NodeStatus,
  SessionStart,
} from "./types";

export class ApiError extends Error {
  constructor(
    public status: number,
    public errorCode: string,
    detail: string,
  ) {
    super(detail ? `${errorCode}: ${detail}` : errorCode);
  }
}

export type FetchLike = typeof fetch;

async function requestJson<T>(
  fetchImpl: FetchLike,
  method: string,
  url: string,
  body?: unknown,
): Promise<T> {
  const response = await fetchImpl(url, {
    method,
    headers: body === undefined ? {} : { "Content-Type": "application/json" },
    body: body === undefined ? undefined : JSON.stringify(body),
  });
  let data: unknown = null;
  try {
    data = await response.json();
  } catch {
    // non-JSON error bodies fall through to the status check
  }
  if (!response.ok) {
    const err = (data ?? {}) as { error?: string; detail?: string };
    throw new ApiError(
      response.status,
      err.error ?? `http-${response.status}`,
      err.detail ?? "",
    );
  }
  return data as T;
}

export class DoorClient {
  constructor(
    public baseUrl: string,
    private fetchImpl: FetchLike = fetch,
  ) {
    this.baseUrl = baseUrl.replace(/\/+$/, "");
  }

  startSession(): Promise<SessionStart> {
    return requestJson(this.fetchImpl, "POST", `${this.baseUrl}/session`);
  }

  /** Dev-mode wallet stand-in: the door's mock issuer signs the attribute. */
  mockDisclosure(name: string, value: string): Promise<AttributeDisclosure> {
    return requestJson(this.fetchImpl, "POST", `${this.baseUrl}/dev/mock-disclosure`, {
      attribute_name: name,
      attribute_value: value,
    });
  }

  async disclose(
    token: string,
    disclosure: AttributeDisclosure,
  ): Promise<DisclosureResult> {
    const reply = await requestJson<{ result: DisclosureResult }>(
      this.fetchImpl,
      "POST",
      `${this.baseUrl}/session/${token}/disclose`,
      disclosure,
    );
    return reply.result;
  }

  complete(token: string, publicKeyB64: string): Promise<KeyBundle> {
    return requestJson(
      this.fetchImpl,
      "POST",
      `${this.baseUrl}/session/${token}/complete`,
      { public_key: publicKeyB64 },
    );
  }
}

export class NodeClient {
  constructor(
    public baseUrl: string,
    private fetchImpl: FetchLike = fetch,
  ) {
    this.baseUrl = baseUrl.replace(/\/+$/, "");
  }

  status(): Promise<NodeStatus> {
    return requestJson(this.fetchImpl, "GET", `${this.baseUrl}/status`);
  }

  async listings(): Promise<ListingRow[]> {
    const reply = await requestJson<{ listings: ListingRow[] }>(
      this.fetchImpl,
      "GET",
      `${this.baseUrl}/listings`,
    );
    return reply.listings;
  }

  createListing(form: {
    title: string;
    description: string;
    price_amount: number;
    currency: string;
    ttl_s: number;
  }): Promise<ListingRow> {
    return requestJson(this.fetchImpl, "POST", `${this.baseUrl}/listings`, form);
  }

  removeListing(contentId: string): Promise<{ removed: string }> {
    return requestJson(
      this.fetchImpl,
      "DELETE",
      `${this.baseUrl}/listings/${contentId}`,
    );
  }

  sendBid(bid: {
    content_id: string;
    amount: number;
    currency: string;
    target_peer: string;
  }): Promise<{ delivered: boolean }> {
    return requestJson(this.fetchImpl, "POST", `${this.baseUrl}/bids`, bid);
  }

  async chats(): Promise<ChatChannel[]> {
    const reply = await requestJson<{ channels: ChatChannel[] }>(
      this.fetchImpl,
      "GET",
      `${this.baseUrl}/chats`,
    );
    return reply.channels;
  }

  async chatHistory(channelId: string): Promise<ChatMessage[]> {
    const reply = await requestJson<{ messages: ChatMessage[] }>(
      this.fetchImpl,
      "GET",
      `${this.baseUrl}/chats/${channelId}`,
    );
    return reply.messages;
  }

  sendChat(channelId: string, body: string): Promise<{ delivered: boolean }> {
    return requestJson(this.fetchImpl, "POST", `${this.baseUrl}/chats/${channelId}`, {
      body,
    });
  }
}
