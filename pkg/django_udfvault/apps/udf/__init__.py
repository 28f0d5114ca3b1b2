# UDF payloads, backends and the encode/decode paths
