/**
 * DOM rendering. Each view is a pure function of store state plus a set
 * of callbacks; screens re-render on store changes. Interactive elements
 * are native buttons, inputs, and forms, so the whole flow is keyboard
 * operable without extra wiring.
 */

import QRCode from "qrcode";

import { formatPrice, formatTimestamp, relativeExpiry, shortFingerprint } from "./format";
import type { ListingForm } from "./market";
import type { MarketState, SignupState } from "./state";
import type { ChatMessage, ListingRow } from "./types";

export function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  children: (Node | string)[] = [],
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    node.setAttribute(key, value);
  }
  for (const child of children) {
    node.append(child);
  }
  return node;
}

// -- signup ------------------------------------------------------------------

export interface SignupCallbacks {
  onStart: () => void;
  onSimulateScan: (name: string, value: string) => void;
  onPublicKeyFile: (text: string) => void;
  onDownloadBundle: () => void;
  onReset: () => void;
}

export function renderSignup(
  root: HTMLElement,
  state: SignupState,
  callbacks: SignupCallbacks,
): void {
  root.replaceChildren();
  root.append(el("h2", {}, ["Sign up"]));

  switch (state.registrationState) {
    case "idle": {
      const button = el("button", { type: "button" }, ["Start registration"]);
      button.addEventListener("click", callbacks.onStart);
      root.append(
        el("p", {}, [
          "Register once with a verified identity attribute; the door " +
            "server certifies your market key.",
        ]),
        button,
      );
      return;
    }
    case "qr-shown": {
      const canvas = el("canvas", { "data-role": "qr", width: "260", height: "260" });
      if (state.qrPayload !== null) {
        // Renders asynchronously; the payload text is shown alongside.
        // Canvas-less test DOMs may throw synchronously, which is fine:
        // the textual payload below carries the same information.
        try {
          void QRCode.toCanvas(canvas, state.qrPayload, { width: 260 }).catch(() => {});
        } catch {
          /* no canvas 2d context available */
        }
      }
      const form = el("form", { "data-role": "mock-wallet" });
      const nameInput = el("input", {
        name: "attribute_name",
        value: "ssn",
        "aria-label": "attribute name",
      });
      const valueInput = el("input", {
        name: "attribute_value",
        placeholder: "e.g. 123456782",
        "aria-label": "attribute value",
        required: "required",
      });
      const scanButton = el("button", { type: "submit" }, ["Simulate wallet scan"]);
      form.append(
        el("label", {}, ["Attribute ", nameInput]),
        el("label", {}, ["Value ", valueInput]),
        scanButton,
      );
      form.addEventListener("submit", (event) => {
        event.preventDefault();
        if (valueInput.value.length > 0) {
          callbacks.onSimulateScan(nameInput.value, valueInput.value);
        }
      });
      root.append(
        el("p", {}, ["Scan with your identity wallet:"]),
        canvas,
        el("p", { class: "hint" }, [state.qrPayload ?? ""]),
        form,
      );
      return;
    }
    case "verified": {
      const fileInput = el("input", {
        type: "file",
        accept: ".json,application/json",
        "aria-label": "public key file",
        "data-role": "public-key-file",
      });
      fileInput.addEventListener("change", () => {
        const file = fileInput.files?.[0];
        if (file) {
          void file.text().then(callbacks.onPublicKeyFile);
        }
      });
      root.append(
        el("p", {}, [
          "Identity verified. Upload the public_key.json written by " +
            "`marketpalace keygen` to have it certified.",
        ]),
        el("label", {}, ["Public key file ", fileInput]),
      );
      return;
    }
    case "completed": {
      const download = el("button", { type: "button", "data-role": "download-bundle" }, [
        "Download key bundle",
      ]);
      download.addEventListener("click", callbacks.onDownloadBundle);
      const again = el("button", { type: "button" }, ["Register another identity"]);
      again.addEventListener("click", callbacks.onReset);
      root.append(
        el("p", { class: "ok", "data-role": "completed" }, [
          "Registration complete. Save the certified key bundle as " +
            "keys/key_bundle.json next to your private key, then start your node.",
        ]),
        download,
        again,
      );
      return;
    }
    case "duplicate": {
      const back = el("button", { type: "button" }, ["Back"]);
      back.addEventListener("click", callbacks.onReset);
      root.append(
        el("p", { class: "error", "data-role": "duplicate" }, [
          "This identity is already registered. The marketplace admits " +
            "each person once, so a second registration was denied.",
        ]),
        back,
      );
      return;
    }
    case "error": {
      const retry = el("button", { type: "button", "data-role": "retry" }, ["Retry"]);
      retry.addEventListener("click", callbacks.onReset);
      root.append(
        el("p", { class: "error", "data-role": "error" }, [
          state.errorMessage ?? "something went wrong",
        ]),
        retry,
      );
      return;
    }
  }
}

// -- market -------------------------------------------------------------------

export interface MarketCallbacks {
  onCreate: (form: ListingForm) => void;
  onRemove: (contentId: string) => void;
  onBid: (row: ListingRow, amountText: string) => void;
  onOpenChat: (row: ListingRow) => void;
  onSendChat: (channelId: string, body: string) => void;
}

export interface MarketViewState {
  openChatChannel: string | null;
  openChatListing: ListingRow | null;
  formErrors: Record<string, string>;
  notice: string | null;
}

export function renderMarket(
  root: HTMLElement,
  state: MarketState,
  view: MarketViewState,
  callbacks: MarketCallbacks,
): void {
  root.replaceChildren();
  root.append(el("h2", {}, ["Listings"]));

  if (!state.online) {
    root.append(
      el("p", { class: "banner error", "data-role": "offline-banner" }, [
        `node unreachable (${state.lastError ?? "?"}); retrying every ` +
          `${state.pollIntervalMs / 1000} s`,
      ]),
    );
  }
  if (view.notice !== null) {
    root.append(el("p", { class: "banner", "data-role": "notice" }, [view.notice]));
  }

  root.append(renderAddForm(view, callbacks));

  const table = el("table", { "data-role": "listings" });
  table.append(
    el("tr", {}, [
      el("th", {}, ["Title"]),
      el("th", {}, ["Price"]),
      el("th", {}, ["Seller"]),
      el("th", {}, ["Posted"]),
      el("th", {}, ["Expires"]),
      el("th", {}, ["Actions"]),
    ]),
  );
  for (const row of state.listings) {
    table.append(renderRow(row, callbacks));
  }
  root.append(table);
  root.append(
    el("p", { class: "hint" }, [`${state.listings.length} listings`]),
  );

  if (view.openChatChannel !== null && view.openChatListing !== null) {
    root.append(
      renderChatPanel(
        view.openChatChannel,
        view.openChatListing,
        state.chatHistories[view.openChatChannel] ?? [],
        callbacks,
      ),
    );
  }
}

function renderAddForm(view: MarketViewState, callbacks: MarketCallbacks): HTMLElement {
  const form = el("form", { "data-role": "add-listing" });
  const title = el("input", { name: "title", "aria-label": "title" });
  const description = el("textarea", { name: "description", "aria-label": "description" });
  const price = el("input", {
    name: "price",
    inputmode: "numeric",
    placeholder: "minor units, e.g. 5000 = 50.00",
    "aria-label": "price",
  });
  const currency = el("input", { name: "currency", value: "EUR", "aria-label": "currency" });
  const submit = el("button", { type: "submit" }, ["Post listing"]);

  const errorFor = (field: string): HTMLElement =>
    el("span", { class: "field-error", "data-error-for": field }, [
      view.formErrors[field] ?? "",
    ]);

  form.append(
    el("label", {}, ["Title ", title, errorFor("title")]),
    el("label", {}, ["Description ", description, errorFor("description")]),
    el("label", {}, ["Price ", price, errorFor("price")]),
    el("label", {}, ["Currency ", currency, errorFor("currency")]),
    submit,
  );
  form.addEventListener("submit", (event) => {
    event.preventDefault();
    callbacks.onCreate({
      title: title.value,
      description: description.value,
      priceText: price.value,
      currency: currency.value,
      ttlDays: 7,
    });
  });
  return form;
}

function renderRow(row: ListingRow, callbacks: MarketCallbacks): HTMLElement {
  const actions = el("td", {});
  if (row.mine) {
    const remove = el("button", { type: "button", "data-role": "remove" }, ["Remove"]);
    remove.addEventListener("click", () => callbacks.onRemove(row.content_id));
    actions.append(remove);
  } else {
    const bidForm = el("form", { class: "bid", "data-role": "bid" });
    const amount = el("input", {
      name: "amount",
      inputmode: "numeric",
      placeholder: "amount",
      "aria-label": `bid amount for ${row.listing.title}`,
    });
    const bidButton = el("button", { type: "submit" }, ["Bid"]);
    bidForm.append(amount, bidButton);
    bidForm.addEventListener("submit", (event) => {
      event.preventDefault();
      callbacks.onBid(row, amount.value);
    });
    const chatButton = el("button", { type: "button", "data-role": "chat" }, ["Chat"]);
    chatButton.addEventListener("click", () => callbacks.onOpenChat(row));
    actions.append(bidForm, chatButton);
  }
  return el("tr", { "data-content-id": row.content_id, "data-mine": String(row.mine) }, [
    el("td", {}, [row.listing.title]),
    el("td", {}, [formatPrice(row.listing.price_amount, row.listing.currency)]),
    el("td", {}, [row.mine ? "you" : shortFingerprint(row.listing.owner_fingerprint)]),
    el("td", {}, [formatTimestamp(row.listing.created_at)]),
    el("td", {}, [relativeExpiry(row.listing.expires_at)]),
    actions,
  ]);
}

function renderChatPanel(
  channelId: string,
  row: ListingRow,
  messages: ChatMessage[],
  callbacks: MarketCallbacks,
): HTMLElement {
  const panel = el("section", { class: "chat", "data-role": "chat-panel" });
  panel.append(el("h3", {}, [`Chat: ${row.listing.title}`]));
  const log = el("ul", { "data-role": "chat-log" });
  for (const msg of messages) {
    log.append(
      el("li", { class: msg.direction }, [
        `${msg.direction === "sent" ? "you" : shortFingerprint(msg.from)}: ${msg.body}`,
      ]),
    );
  }
  panel.append(log);
  const form = el("form", { "data-role": "chat-form" });
  const body = el("input", { name: "body", "aria-label": "chat message" });
  const send = el("button", { type: "submit" }, ["Send"]);
  form.append(body, send);
  form.addEventListener("submit", (event) => {
    event.preventDefault();
    if (body.value.length > 0) {
      callbacks.onSendChat(channelId, body.value);
      body.value = "";
    }
  });
  panel.append(form);
  return panel;
}
