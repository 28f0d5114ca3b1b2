# Elementwise expression language: parser, bytecode compiler and VM
