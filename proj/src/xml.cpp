#include "masq/xml.hpp"

#include <expat.h>

#include <algorithm>
#include <cstring>
#include <stdexcept>

#include "masq/core.hpp"

namespace masq::xml {

namespace {

struct ParseState {
    XML_Parser parser = nullptr;
    Document* doc = nullptr;
    std::vector<Node*> stack;       // open elements, innermost last
    bool seen_root = false;
    bool in_cdata = false;
    std::string error;              // first structural complaint wins

    void fail(const std::string& message) {
        if (error.empty()) {
            error = message + " at line " +
                    std::to_string(XML_GetCurrentLineNumber(parser)) + ", column " +
                    std::to_string(XML_GetCurrentColumnNumber(parser) + 1);
        }
        XML_StopParser(parser, XML_FALSE);
    }

    // Nodes before the root go to prolog, after it to epilog, inside an open
    // element to its children.
    void emit(Node node) {
        if (!stack.empty()) {
            stack.back()->children.push_back(std::move(node));
        } else if (!seen_root) {
            doc->prolog.push_back(std::move(node));
        } else {
            doc->epilog.push_back(std::move(node));
        }
    }
};

void XMLCALL on_start_element(void* user, const XML_Char* name, const XML_Char** attrs) {
    auto* st = static_cast<ParseState*>(user);
    Node element;
    element.kind = NodeKind::Element;
    element.name = name;
    for (const XML_Char** a = attrs; *a != nullptr; a += 2) {
        element.attributes.emplace_back(a[0], a[1]);
    }
    if (st->stack.empty()) {
        if (st->seen_root) {
            st->fail("multiple root elements");
            return;
        }
        st->seen_root = true;
        st->doc->root = std::move(element);
        st->stack.push_back(&st->doc->root);
    } else {
        st->stack.back()->children.push_back(std::move(element));
        st->stack.push_back(&st->stack.back()->children.back());
    }
}

void XMLCALL on_end_element(void* user, const XML_Char*) {
    auto* st = static_cast<ParseState*>(user);
    if (!st->stack.empty()) st->stack.pop_back();
}

void XMLCALL on_character_data(void* user, const XML_Char* data, int len) {
    auto* st = static_cast<ParseState*>(user);
    if (st->stack.empty()) return;  // whitespace outside the root is dropped
    std::vector<Node>& siblings = st->stack.back()->children;
    NodeKind kind = st->in_cdata ? NodeKind::Cdata : NodeKind::Text;
    // Expat splits character data arbitrarily; merge adjacent runs of the
    // same kind back into one node.
    if (!siblings.empty() && siblings.back().kind == kind) {
        siblings.back().text.append(data, static_cast<std::size_t>(len));
        return;
    }
    Node node;
    node.kind = kind;
    node.text.assign(data, static_cast<std::size_t>(len));
    siblings.push_back(std::move(node));
}

void XMLCALL on_cdata_start(void* user) {
    static_cast<ParseState*>(user)->in_cdata = true;
}

void XMLCALL on_cdata_end(void* user) {
    static_cast<ParseState*>(user)->in_cdata = false;
}

void XMLCALL on_comment(void* user, const XML_Char* data) {
    auto* st = static_cast<ParseState*>(user);
    Node node;
    node.kind = NodeKind::Comment;
    node.text = data;
    st->emit(std::move(node));
}

void XMLCALL on_processing_instruction(void* user, const XML_Char* target,
                                       const XML_Char* data) {
    auto* st = static_cast<ParseState*>(user);
    Node node;
    node.kind = NodeKind::ProcInstr;
    node.name = target;
    node.text = data != nullptr ? data : "";
    st->emit(std::move(node));
}

void XMLCALL on_xml_decl(void* user, const XML_Char* version, const XML_Char* encoding,
                         int /*standalone*/) {
    auto* st = static_cast<ParseState*>(user);
    st->doc->has_declaration = true;
    if (version != nullptr) st->doc->version = version;
    if (encoding != nullptr) st->doc->encoding = encoding;
}

void XMLCALL on_entity_decl(void* user, const XML_Char* entity_name, int, const XML_Char*, int,
                            const XML_Char*, const XML_Char*, const XML_Char*,
                            const XML_Char*) {
    auto* st = static_cast<ParseState*>(user);
    st->fail("custom entity declaration '" + std::string(entity_name) + "' is not allowed");
}

void append_escaped_text(std::string& out, std::string_view text) {
    for (char c : text) {
        switch (c) {
            case '&':
                out += "&amp;";
                break;
            case '<':
                out += "&lt;";
                break;
            case '>':
                out += "&gt;";
                break;
            default:
                out += c;
        }
    }
}

void append_escaped_attribute(std::string& out, std::string_view value) {
    for (char c : value) {
        switch (c) {
            case '&':
                out += "&amp;";
                break;
            case '<':
                out += "&lt;";
                break;
            case '>':
                out += "&gt;";
                break;
            case '"':
                out += "&quot;";
                break;
            case '\n':
                out += "&#10;";
                break;
            case '\t':
                out += "&#9;";
                break;
            default:
                out += c;
        }
    }
}

void append_cdata(std::string& out, std::string_view text) {
    out += "<![CDATA[";
    std::size_t pos = 0;
    // "]]>" cannot appear inside one section; split it as "]]" + "]>" across
    // two sections.
    while (true) {
        std::size_t hit = text.find("]]>", pos);
        if (hit == std::string_view::npos) {
            out += text.substr(pos);
            break;
        }
        out += text.substr(pos, hit - pos);
        out += "]]]]><![CDATA[>";
        pos = hit + 3;
    }
    out += "]]>";
}

void serialize_node(std::string& out, const Node& node) {
    switch (node.kind) {
        case NodeKind::Text:
            append_escaped_text(out, node.text);
            return;
        case NodeKind::Cdata:
            append_cdata(out, node.text);
            return;
        case NodeKind::Comment:
            out += "<!--";
            out += node.text;
            out += "-->";
            return;
        case NodeKind::ProcInstr:
            out += "<?";
            out += node.name;
            if (!node.text.empty()) {
                out += ' ';
                out += node.text;
            }
            out += "?>";
            return;
        case NodeKind::Element:
            break;
    }
    out += '<';
    out += node.name;
    for (const auto& [attr_name, attr_value] : node.attributes) {
        out += ' ';
        out += attr_name;
        out += "=\"";
        append_escaped_attribute(out, attr_value);
        out += '"';
    }
    if (node.children.empty()) {
        out += "/>";
        return;
    }
    out += '>';
    for (const Node& child : node.children) serialize_node(out, child);
    out += "</";
    out += node.name;
    out += '>';
}

void preorder_names(const Node& node, std::vector<std::string>& out) {
    if (node.kind != NodeKind::Element) return;
    out.push_back(node.name);
    for (const Node& child : node.children) preorder_names(child, out);
}

bool element_equal(const Node& a, const Node& b) {
    if (a.name != b.name) return false;

    auto attribute_map = [](const Node& n) {
        std::vector<std::pair<std::string, std::string>> attrs = n.attributes;
        std::sort(attrs.begin(), attrs.end());
        return attrs;
    };
    if (attribute_map(a) != attribute_map(b)) return false;

    // Children compare positionally over elements; text and CDATA merge into
    // the character data between/around them, comments and PIs vanish.
    auto normalized = [](const Node& n) {
        std::vector<const Node*> elements;
        std::vector<std::string> gaps(1);
        for (const Node& child : n.children) {
            switch (child.kind) {
                case NodeKind::Element:
                    elements.push_back(&child);
                    gaps.emplace_back();
                    break;
                case NodeKind::Text:
                case NodeKind::Cdata:
                    gaps.back() += child.text;
                    break;
                default:
                    break;
            }
        }
        return std::make_pair(std::move(elements), std::move(gaps));
    };

    auto [ea, ga] = normalized(a);
    auto [eb, gb] = normalized(b);
    if (ga != gb || ea.size() != eb.size()) return false;
    for (std::size_t i = 0; i < ea.size(); ++i) {
        if (!element_equal(*ea[i], *eb[i])) return false;
    }
    return true;
}

}  // namespace

Document parse(std::string_view xml_text) {
    Document doc;
    XML_Parser parser = XML_ParserCreate(nullptr);
    if (parser == nullptr) throw std::runtime_error("XML_ParserCreate failed");

    ParseState state;
    state.parser = parser;
    state.doc = &doc;

    XML_SetUserData(parser, &state);
    XML_SetElementHandler(parser, on_start_element, on_end_element);
    XML_SetCharacterDataHandler(parser, on_character_data);
    XML_SetCdataSectionHandler(parser, on_cdata_start, on_cdata_end);
    XML_SetCommentHandler(parser, on_comment);
    XML_SetProcessingInstructionHandler(parser, on_processing_instruction);
    XML_SetXmlDeclHandler(parser, on_xml_decl);
    XML_SetEntityDeclHandler(parser, on_entity_decl);

    enum XML_Status status = XML_Parse(parser, xml_text.data(),
                                       static_cast<int>(xml_text.size()), XML_TRUE);
    std::string message;
    if (!state.error.empty()) {
        message = state.error;
    } else if (status != XML_STATUS_OK) {
        message = std::string(XML_ErrorString(XML_GetErrorCode(parser))) + " at line " +
                  std::to_string(XML_GetCurrentLineNumber(parser)) + ", column " +
                  std::to_string(XML_GetCurrentColumnNumber(parser) + 1);
    } else if (!state.seen_root) {
        message = "no root element";
    }
    XML_ParserFree(parser);

    if (!message.empty()) throw Error(Errc::MalformedXml, message);
    return doc;
}

std::string serialize(const Document& document) {
    std::string out;
    if (document.has_declaration) {
        out += "<?xml version=\"";
        out += document.version;
        out += '"';
        if (!document.encoding.empty()) {
            out += " encoding=\"";
            out += document.encoding;
            out += '"';
        }
        out += "?>\n";
    }
    for (const Node& node : document.prolog) {
        serialize_node(out, node);
        out += '\n';
    }
    serialize_node(out, document.root);
    for (const Node& node : document.epilog) {
        out += '\n';
        serialize_node(out, node);
    }
    out += '\n';
    return out;
}

std::vector<std::string> element_name_preorder(const Document& document) {
    std::vector<std::string> names;
    preorder_names(document.root, names);
    return names;
}

bool tree_equal(const Document& a, const Document& b) {
    return element_equal(a.root, b.root);
}

}  // namespace masq::xml
