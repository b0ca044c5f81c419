/**
 * App bootstrap: wires stores, controllers, and views into the page.
 *
 * Server addresses come from query parameters (?door=…&node=…) or the
 * settings form, defaulting to the standard local ports.
 */

import { DoorClient, NodeClient } from "./api";
import { MarketController } from "./market";
import { SignupFlow, bundleFileText } from "./signup";
import { createMarketStore, createSignupStore } from "./state";
import type { MarketViewState } from "./views";
import { el, renderMarket, renderSignup } from "./views";

import "./style.css";

const params = new URLSearchParams(window.location.search);
const doorUrl = params.get("door") ?? "http://127.0.0.1:8800";
const nodeUrl = params.get("node") ?? "http://127.0.0.1:7700";

const signupStore = createSignupStore();
const signupFlow = new SignupFlow(new DoorClient(doorUrl), signupStore);
const marketStore = createMarketStore();
const market = new MarketController(new NodeClient(nodeUrl), marketStore);

const app = document.getElementById("app");
if (app === null) {
  throw new Error("missing #app element");
}
const signupRoot = el("section", { id: "signup" });
const marketRoot = el("section", { id: "market" });
app.append(
  el("header", {}, [
    el("h1", {}, ["MarketPalace"]),
    el("p", { class: "hint" }, [`door ${doorUrl} · node ${nodeUrl}`]),
  ]),
  signupRoot,
  marketRoot,
);

const marketView: MarketViewState = {
  openChatChannel: null,
  openChatListing: null,
  formErrors: {},
  notice: null,
};

function downloadBundle(): void {
  const text = bundleFileText(signupStore.get());
  const blob = new Blob([text], { type: "application/json" });
  const link = el("a", {
    href: URL.createObjectURL(blob),
    download: "key_bundle.json",
  });
  link.click();
  URL.revokeObjectURL(link.href);
}

function paintSignup(): void {
  renderSignup(signupRoot, signupStore.get(), {
    onStart: () => void signupFlow.start(),
    onSimulateScan: (name, value) => void signupFlow.simulateWalletScan(name, value),
    onPublicKeyFile: (text) => void signupFlow.submitPublicKeyFile(text),
    onDownloadBundle: downloadBundle,
    onReset: () => signupFlow.reset(),
  });
}

function paintMarket(): void {
  renderMarket(marketRoot, marketStore.get(), marketView, {
    onCreate: (form) => {
      void market.createListing(form).then((errors) => {
        marketView.formErrors = errors as Record<string, string>;
        marketView.notice = Object.keys(errors).length === 0 ? "listing posted" : null;
        paintMarket();
      });
    },
    onRemove: (contentId) => {
      void market.removeListing(contentId).then((error) => {
        marketView.notice = error ?? "listing removed";
        paintMarket();
      });
    },
    onBid: (row, amountText) => {
      void market
        .sendBid(
          row.content_id,
          amountText,
          row.listing.currency,
          row.listing.owner_fingerprint,
        )
        .then((error) => {
          marketView.notice = error ?? "bid sent to the seller";
          paintMarket();
        });
    },
    onOpenChat: (row) => {
      marketView.openChatChannel = row.chat_channel_id;
      marketView.openChatListing = row;
      if (row.chat_channel_id !== null) {
        void market.refreshChat(row.chat_channel_id);
      }
      paintMarket();
    },
    onSendChat: (channelId, body) => {
      void market.sendChat(channelId, body).then((error) => {
        if (error !== null) {
          marketView.notice = error;
          paintMarket();
        }
      });
    },
  });
}

signupStore.subscribe(paintSignup);
marketStore.subscribe(paintMarket);
paintSignup();
paintMarket();
market.start();
