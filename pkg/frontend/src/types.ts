/** Wire shapes of the door server and node APIs the UI consumes. */

export interface SessionStart {
  token: string;
  qr_payload: string;
}

export type DisclosureResult = "accepted" | "duplicate" | "invalid";

export interface AttributeDisclosure {
  attribute_name: string;
  attribute_value: string;
  issuer_id: string;
  issuer_signature: string;
}

/** Certified key bundle returned on completion; the user downloads this. */
export interface KeyBundle {
  public_key: string;
  certification: string;
  created_at: number;
}

export interface Listing {
  title: string;
  description: string;
  price_amount: number;
  currency: string;
  owner_fingerprint: string;
  created_at: number;
  expires_at: number;
  nonce: number;
}

export interface ListingRow {
  listing: Listing;
  content_id: string;
  owner_cert: { public_key: string; certification: string };
  signature: string;
  mine: boolean;
  chat_channel_id: string | null;
}

export interface NodeStatus {
  peer_id: string;
  peer_count: number;
  listing_count: number;
  uptime_s: number;
  registered: boolean;
  fingerprint: string;
}

export interface ChatChannel {
  channel_id: string;
  peer_fingerprint: string;
  content_id: string | null;
  message_count: number;
}

export interface ChatMessage {
  body: string;
  sent_at: number;
  direction: "sent" | "received";
  from: string;
}

export interface ApiErrorBody {
  error: string;
  detail?: string;
}
